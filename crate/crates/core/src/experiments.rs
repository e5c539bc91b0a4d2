//! Named experiment presets and parameter sweeps.
//!
//! An [`ExperimentSpec`] is a TOML document merged onto the `[defaults]`
//! table of the built-in preset file. Sweeps and `key=value` overrides both
//! edit the document by dotted path before it is deserialized, so anything
//! that can be written in a spec file can also be swept or overridden.
//!
//! Output layout of [`run_experiment`]:
//!
//! ```text
//! <outdir>/<name>/spec.toml
//! <outdir>/<name>/summary.csv
//! <outdir>/<name>/<sweep-label>/rep_<r>/{spins,chain,schedule}.csv
//! <outdir>/<name>/<sweep-label>/rep_<r>/husimi/spin<s>_period<p>.csv
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::{auxiliary_rng, generate_schedule, BathSpec, KickSchedule};
use crate::chain::{ChainConfig, Coupling, SpinState, StateVector};
use crate::error::{invalid, Error, Result};
use crate::observables::{husimi, measure, reduce, HusimiGrid, ObservableRecord};
use crate::propagator::Propagator;

const PRESETS: &str = include_str!("../presets.toml");

/// How the initial single-spin states are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Cat,
    Up,
    Down,
    /// `a|↑⟩ + √(1 - a²)|↓⟩` on every spin.
    Real {
        a: f64,
    },
    /// The same complex amplitudes `(re, im)` on every spin.
    Amplitudes {
        up: [f64; 2],
        down: [f64; 2],
    },
    /// Per spin `a` uniform in `[a_min, a_max]`, drawn from the replicate seed.
    RandomReal {
        a_min: f64,
        a_max: f64,
    },
    /// One real `a` per spin.
    PerSpin {
        a: Vec<f64>,
    },
}

impl InitialSpec {
    pub fn states(&self, n_spins: usize, seed: u64) -> Result<Vec<SpinState>> {
        let check_a = |a: f64| {
            if (0.0..=1.0).contains(&a) {
                Ok(())
            } else {
                Err(invalid("chain.initial", format!("a = {a} outside [0, 1]")))
            }
        };
        Ok(match self {
            InitialSpec::Cat => vec![SpinState::cat(); n_spins],
            InitialSpec::Up => vec![SpinState::up(); n_spins],
            InitialSpec::Down => vec![SpinState::down(); n_spins],
            InitialSpec::Real { a } => {
                check_a(*a)?;
                vec![SpinState::real(*a); n_spins]
            }
            InitialSpec::Amplitudes { up, down } => {
                let s = SpinState::new(C64::new(up[0], up[1]), C64::new(down[0], down[1]));
                vec![s; n_spins]
            }
            InitialSpec::RandomReal { a_min, a_max } => {
                check_a(*a_min)?;
                check_a(*a_max)?;
                if a_min > a_max {
                    return Err(invalid("chain.initial", "a_min exceeds a_max"));
                }
                (1..=n_spins)
                    .map(|spin| {
                        let a = auxiliary_rng(seed, spin as u64).random_range(*a_min..=*a_max);
                        SpinState::real(a)
                    })
                    .collect()
            }
            InitialSpec::PerSpin { a } => {
                if a.len() != n_spins {
                    return Err(invalid(
                        "chain.initial",
                        format!("expected {n_spins} values of a, got {}", a.len()),
                    ));
                }
                for &x in a {
                    check_a(x)?;
                }
                a.iter().map(|&x| SpinState::real(x)).collect()
            }
        })
    }
}

/// Chain parameters with the initial states given by rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n_spins: usize,
    pub coupling: Coupling,
    pub j_over_w0: f64,
    pub w1_over_w0: f64,
    pub kick_theta: f64,
    pub kick_offset_pi4: bool,
    pub initial: InitialSpec,
}

impl ChainSpec {
    pub fn to_config(&self, seed: u64) -> Result<ChainConfig> {
        let cfg = ChainConfig {
            n_spins: self.n_spins,
            coupling: self.coupling,
            j_over_w0: self.j_over_w0,
            w1_over_w0: self.w1_over_w0,
            kick_theta: self.kick_theta,
            kick_offset_pi4: self.kick_offset_pi4,
            initial_states: self.initial.states(self.n_spins, seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Dotted path into the spec, e.g. `chain.j_over_w0`.
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Husimi grids to dump for every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiOutput {
    /// 1-based spins; empty means all.
    #[serde(default)]
    pub spins: Vec<usize>,
    pub periods: Vec<usize>,
    pub theta_res: usize,
    pub phi_res: usize,
}

impl HusimiOutput {
    fn spins_for(&self, n_spins: usize) -> Vec<usize> {
        if self.spins.is_empty() {
            (1..=n_spins).collect()
        } else {
            self.spins.clone()
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub figure: String,
    #[serde(default)]
    pub description: String,
    pub n_periods: usize,
    pub replicates: usize,
    /// Explicit replicate seeds; when empty replicate `r` uses `bath.seed + r`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub summary_periods: Vec<usize>,
    pub outdir: PathBuf,
    pub chain: ChainSpec,
    pub bath: BathSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub husimi: Option<HusimiOutput>,
}

impl ExperimentSpec {
    pub fn replicate_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.replicates as u64)
                .map(|r| self.bath.seed.wrapping_add(r))
                .collect()
        } else {
            self.seeds.clone()
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks the spec and every sweep point it expands to.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        if !self.seeds.is_empty() && self.seeds.len() != self.replicates {
            return Err(invalid(
                "seeds",
                format!("{} seeds for {} replicates", self.seeds.len(), self.replicates),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(invalid("sweep.values", "must not be empty"));
            }
            if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
                return Err(invalid("sweep.values", format!("non-finite value {v}")));
            }
            let labels: Vec<String> = sweep.values.iter().map(|&v| sweep_label(&sweep.parameter, v)).collect();
            for (k, l) in labels.iter().enumerate() {
                if labels[..k].contains(l) {
                    return Err(invalid("sweep.values", format!("duplicate value {l}")));
                }
            }
        }
        for (_, point) in self.points()? {
            point.chain.to_config(point.bath.seed)?;
            point.bath.validate()?;
            if let Some(h) = &point.husimi {
                if h.theta_res < 2 || h.phi_res < 2 {
                    return Err(Error::HusimiResolution {
                        theta_res: h.theta_res,
                        phi_res: h.phi_res,
                    });
                }
                for &s in &h.spins {
                    if s == 0 || s > point.chain.n_spins {
                        return Err(Error::SiteOutOfRange {
                            site: s,
                            n_spins: point.chain.n_spins,
                        });
                    }
                }
                if let Some(p) = h.periods.iter().find(|&&p| p > point.n_periods) {
                    return Err(invalid("husimi.periods", format!("period {p} beyond n_periods")));
                }
            }
        }
        Ok(())
    }

    /// The spec at every sweep value, sweep removed. Without a sweep the
    /// single entry has no value.
    pub fn points(&self) -> Result<Vec<(Option<f64>, ExperimentSpec)>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![(None, self.clone())]);
        };
        let mut base = self.clone();
        base.sweep = None;
        let doc = to_value(&base)?;
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut d = doc.clone();
                set_path(&mut d, &sweep.parameter, toml::Value::Float(v))?;
                Ok((Some(v), from_value(d)?))
            })
            .collect()
    }
}

/// Directory name of one sweep value.
pub fn sweep_label(parameter: &str, value: f64) -> String {
    let key = parameter.rsplit('.').next().unwrap_or(parameter);
    format!("{key}={value}")
}

fn to_value(spec: &ExperimentSpec) -> Result<toml::Value> {
    toml::Value::try_from(spec).map_err(|e| Error::Config(e.to_string()))
}

fn from_value(doc: toml::Value) -> Result<ExperimentSpec> {
    doc.try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

/// Sets `path` in a TOML document, creating tables on the way. Integers and
/// floats are coerced to the type already stored under that key.
pub fn set_path(doc: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed key path '{path}'")));
    }
    let mut cur = doc;
    for k in &keys[..keys.len() - 1] {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{path}': '{k}' is not inside a table")))?;
        cur = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let last = keys[keys.len() - 1];
    let table = cur
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("'{path}': parent is not a table")))?;
    let coerced = match (table.get(last), value) {
        (Some(toml::Value::Integer(_)), toml::Value::Float(f)) => {
            if f.fract() != 0.0 || !f.is_finite() {
                return Err(Error::InvalidConfig {
                    field: path.to_string(),
                    reason: format!("expected an integer, got {f}"),
                });
            }
            toml::Value::Integer(f as i64)
        }
        (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    };
    table.insert(last.to_string(), coerced);
    Ok(())
}

/// Parses the right-hand side of `key=value`: a TOML literal when possible,
/// a bare string otherwise.
pub fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Splits `key=value`.
pub fn parse_override(arg: &str) -> Result<(String, toml::Value)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{arg}' is not key=value")))?;
    Ok((k.trim().to_string(), parse_override_value(v.trim())))
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn preset_file() -> toml::Table {
    PRESETS.parse().expect("built-in presets parse")
}

fn defaults_value() -> toml::Value {
    preset_file().remove("defaults").expect("defaults table")
}

/// Resolves a spec document merged onto the defaults, then applies overrides
/// in order.
pub fn resolve(name: &str, doc: toml::Value, overrides: &[(String, toml::Value)]) -> Result<ExperimentSpec> {
    let mut full = defaults_value();
    merge(&mut full, doc);
    if let Some(t) = full.as_table_mut() {
        t.insert("name".into(), toml::Value::String(name.to_string()));
    }
    for (k, v) in overrides {
        set_path(&mut full, k, v.clone())?;
    }
    let spec = from_value(full)?;
    spec.validate()?;
    Ok(spec)
}

/// The defaults alone, as a single run named `name`.
pub fn default_spec(name: &str, overrides: &[(String, toml::Value)]) -> Result<ExperimentSpec> {
    resolve(name, toml::Value::Table(toml::Table::new()), overrides)
}

/// A built-in preset with overrides applied.
pub fn preset(name: &str, overrides: &[(String, toml::Value)]) -> Result<ExperimentSpec> {
    let mut presets = preset_file()
        .remove("presets")
        .and_then(|v| v.as_table().cloned())
        .unwrap_or_default();
    let doc = presets
        .remove(name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    resolve(name, doc, overrides)
}

/// A spec file; its `name` key defaults to the file stem.
pub fn load_spec_file(path: &Path, overrides: &[(String, toml::Value)]) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)?;
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let name = match doc.remove("name") {
        Some(toml::Value::String(s)) => s,
        _ => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".into()),
    };
    resolve(&name, toml::Value::Table(doc), overrides)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PresetInfo {
    pub name: String,
    pub figure: String,
    pub description: String,
}

/// Every built-in preset, in file order.
pub fn list_presets() -> Vec<PresetInfo> {
    let presets = preset_file().remove("presets").expect("presets table");
    let text = |t: &toml::Value, k: &str| t.get(k).and_then(|v| v.as_str()).unwrap_or_default().to_string();
    let mut out: Vec<(usize, PresetInfo)> = presets
        .as_table()
        .expect("presets table")
        .iter()
        .map(|(name, t)| {
            let pos = PRESETS.find(&format!("[presets.{name}]")).unwrap_or(usize::MAX);
            (
                pos,
                PresetInfo {
                    name: name.clone(),
                    figure: text(t, "figure"),
                    description: text(t, "description"),
                },
            )
        })
        .collect();
    out.sort_by_key(|(pos, _)| *pos);
    out.into_iter().map(|(_, p)| p).collect()
}

/// One (sweep value, replicate) run.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: Option<f64>,
    pub label: String,
    pub replicate: usize,
    pub seed: u64,
    pub config: ChainConfig,
    pub schedule: KickSchedule,
    pub record: ObservableRecord,
    /// `(spin, period, grid)` in spin-major order.
    pub husimi: Vec<(usize, usize, HusimiGrid)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub value: Option<f64>,
    pub replicate: usize,
    pub seed: u64,
    pub period: usize,
    pub s_tot: f64,
    pub pop_avg: f64,
    pub coh_avg: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: ExperimentSpec,
    /// Sweep-value major, replicate minor.
    pub points: Vec<SweepPoint>,
    pub summary: Vec<SummaryRow>,
    /// Files written, relative to the experiment directory.
    pub artifacts: Vec<PathBuf>,
}

impl SweepResult {
    pub fn point(&self, value: Option<f64>, replicate: usize) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.value == value && p.replicate == replicate)
    }

    /// `sweep_value,replicate,seed,period,S_tot,pop_avg,coh_avg`.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sweep_value,replicate,seed,period,S_tot,pop_avg,coh_avg")?;
        for r in &self.summary {
            let v = r.value.map(|v| format!("{v}")).unwrap_or_default();
            writeln!(
                out,
                "{v},{},{},{},{:.16e},{:.16e},{:.16e}",
                r.replicate, r.seed, r.period, r.s_tot, r.pop_avg, r.coh_avg
            )?;
        }
        Ok(())
    }
}

/// Runs one resolved, sweep-free spec with `seed`. A given `schedule`
/// replaces the bath.
pub fn run_point(spec: &ExperimentSpec, seed: u64, schedule: Option<KickSchedule>) -> Result<SweepPoint> {
    let bath = BathSpec {
        seed,
        ..spec.bath.clone()
    };
    let config = spec.chain.to_config(seed)?;
    let schedule = match schedule {
        Some(s) => s,
        None => generate_schedule(&bath, config.n_spins, spec.n_periods)?,
    };
    let prop = Propagator::new(&config)?;
    let mut record = ObservableRecord::default();
    let mut grids: BTreeMap<(usize, usize), HusimiGrid> = BTreeMap::new();
    let mut failure = None;
    let husimi_spins = spec.husimi.as_ref().map(|h| h.spins_for(config.n_spins));
    prop.run(
        StateVector::product(&config.initial_states),
        &schedule,
        |period, state| {
            record.push(measure(state, period));
            if let (Some(h), Some(spins)) = (&spec.husimi, &husimi_spins) {
                if h.periods.contains(&period) {
                    for &s in spins {
                        match reduce(state, s).and_then(|rho| husimi(&rho, h.theta_res, h.phi_res)) {
                            Ok(g) => {
                                grids.insert((s, period), g);
                            }
                            Err(e) => failure = Some(e),
                        }
                    }
                }
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SweepPoint {
        value: None,
        label: String::new(),
        replicate: 0,
        seed,
        config,
        schedule,
        record,
        husimi: grids.into_iter().map(|((s, p), g)| (s, p, g)).collect(),
    })
}

/// Runs every (sweep value, replicate) pair without touching the disk.
/// `jobs` caps the worker threads; `None` uses the global pool.
pub fn compute(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let seeds = spec.replicate_seeds();
    let mut tasks = Vec::new();
    for (value, point) in spec.points()? {
        let label = match (&spec.sweep, value) {
            (Some(s), Some(v)) => sweep_label(&s.parameter, v),
            _ => "base".to_string(),
        };
        for (r, &seed) in seeds.iter().enumerate() {
            tasks.push((value, label.clone(), r, seed, point.clone()));
        }
    }
    let work = || {
        tasks
            .par_iter()
            .map(|(value, label, r, seed, point)| {
                run_point(point, *seed, None).map(|p| SweepPoint {
                    value: *value,
                    label: label.clone(),
                    replicate: *r,
                    ..p
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    let points = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let summary = points
        .iter()
        .flat_map(|p| {
            spec.summary_periods.iter().filter_map(move |&k| {
                p.record.get(k).map(|o| SummaryRow {
                    value: p.value,
                    replicate: p.replicate,
                    seed: p.seed,
                    period: k,
                    s_tot: o.s_tot,
                    pop_avg: o.pop_avg,
                    coh_avg: o.coh_avg,
                })
            })
        })
        .collect();
    Ok(SweepResult {
        spec: spec.clone(),
        points,
        summary,
        artifacts: Vec::new(),
    })
}

fn write_file(dir: &Path, rel: PathBuf, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
    let path = dir.join(&rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(&path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(rel)
}

/// Writes the CSV files of one run into `dir`, returning their names.
pub fn write_point(point: &SweepPoint, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = vec![
        write_file(dir, "spins.csv".into(), |w| point.record.write_spin_csv(w))?,
        write_file(dir, "chain.csv".into(), |w| point.record.write_chain_csv(w))?,
        write_file(dir, "schedule.csv".into(), |w| point.schedule.write_csv(w))?,
    ];
    for (s, p, g) in &point.husimi {
        let rel = PathBuf::from("husimi").join(format!("spin{s}_period{p}.csv"));
        files.push(write_file(dir, rel, |w| g.write_csv(w, *s, *p))?);
    }
    Ok(files)
}

fn write_all(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = vec![
        write_file(dir, "spec.toml".into(), |w| {
            Ok(w.write_all(result.spec.to_toml()?.as_bytes())?)
        })?,
        write_file(dir, "summary.csv".into(), |w| result.write_summary_csv(w))?,
    ];
    for p in &result.points {
        let rel = PathBuf::from(&p.label).join(format!("rep_{}", p.replicate));
        for f in write_point(p, &dir.join(&rel))? {
            files.push(rel.join(f));
        }
    }
    Ok(files)
}

/// Builds a run directory at `dest` through `fill`, which receives a scratch
/// directory and returns the files it wrote. The scratch tree is moved into
/// place only if `fill` succeeds; an existing `dest` is an error unless
/// `force` is set.
pub fn write_run_dir<F>(dest: &Path, force: bool, fill: F) -> Result<Vec<PathBuf>>
where
    F: FnOnce(&Path) -> Result<Vec<PathBuf>>,
{
    if dest.exists() && !force {
        return Err(Error::OutputExists(dest.to_path_buf()));
    }
    let parent = dest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(parent)?;
    let leaf = dest
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let scratch = parent.join(format!(".{leaf}.partial-{}", std::process::id()));
    if scratch.exists() {
        fs::remove_dir_all(&scratch)?;
    }
    fs::create_dir_all(&scratch)?;
    let files = match fill(&scratch) {
        Ok(f) => f,
        Err(e) => {
            let _ = fs::remove_dir_all(&scratch);
            return Err(e);
        }
    };
    if dest.exists() {
        fs::remove_dir_all(dest)?;
    }
    if let Err(e) = fs::rename(&scratch, dest) {
        let _ = fs::remove_dir_all(&scratch);
        return Err(e.into());
    }
    Ok(files)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces `spec.outdir` when set.
    pub outdir: Option<PathBuf>,
    pub force: bool,
    pub jobs: Option<usize>,
}

/// Computes the experiment and writes it to `<outdir>/<name>`.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<(SweepResult, PathBuf)> {
    let outdir = opts.outdir.clone().unwrap_or_else(|| spec.outdir.clone());
    let dest = outdir.join(&spec.name);
    if dest.exists() && !opts.force {
        return Err(Error::OutputExists(dest));
    }
    let mut result = compute(spec, opts.jobs)?;
    result.artifacts = write_run_dir(&dest, opts.force, |dir| write_all(&result, dir))?;
    Ok((result, dest))
}

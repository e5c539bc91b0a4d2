//! `kickchain` command-line entry point.

mod manifest;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use kickchain::bath::{generate_schedule, BathKind, KickSchedule};
use kickchain::chain::Coupling;
use kickchain::experiments::{
    self, default_spec, list_presets, load_spec_file, parse_override, preset, run_point, write_point, write_run_dir,
    ExperimentSpec, HusimiOutput, RunOptions,
};

use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "kickchain",
    version,
    about = "Kicked spin chains under a classical kick bath"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trajectory and write its observables.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Replay kicks from a schedule CSV instead of sampling the bath.
        #[arg(long)]
        schedule_file: Option<PathBuf>,
    },
    /// Run a named preset, with its sweep and replicates.
    Experiment {
        preset: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Export the kick schedule only.
    Schedule {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Dump Husimi grids for chosen spins and periods.
    Husimi {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        schedule_file: Option<PathBuf>,
        /// 1-based spin, repeatable; all spins when absent.
        #[arg(long = "site")]
        sites: Vec<usize>,
        /// Period, repeatable; the first and last period when absent.
        #[arg(long = "at")]
        at: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        theta_res: usize,
        #[arg(long, default_value_t = 200)]
        phi_res: usize,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Spec file merged onto the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    spins: Option<usize>,
    #[arg(long)]
    coupling: Option<Coupling>,
    #[arg(long)]
    bath: Option<BathKind>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    d0_lambda_only: bool,
    #[arg(long)]
    j_over_w0: Option<f64>,
    #[arg(long)]
    w1_over_w0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kick_theta: Option<f64>,
    #[arg(long)]
    kick_offset_pi4: bool,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    drift_a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    drift_b: Option<f64>,
    /// `key=value` override by dotted path, applied after the other flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, env = "KICKCHAIN_OUTDIR")]
    outdir: Option<PathBuf>,
    /// Name of the run directory under the output directory.
    #[arg(long)]
    name: Option<String>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Replace an existing run directory.
    #[arg(long)]
    force: bool,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, toml::Value)>> {
        use toml::Value as V;
        let mut o: Vec<(String, V)> = Vec::new();
        let mut put = |k: &str, v: V| o.push((k.to_string(), v));
        if let Some(n) = self.spins {
            put("chain.n_spins", V::Integer(n as i64));
        }
        if let Some(c) = self.coupling {
            put("chain.coupling", V::String(c.to_string()));
        }
        if let Some(b) = self.bath {
            put("bath.kind", V::String(b.to_string()));
        }
        if let Some(k) = self.periods {
            put("n_periods", V::Integer(k as i64));
        }
        if let Some(s) = self.seed {
            put(
                "bath.seed",
                V::Integer(i64::try_from(s).context("--seed must fit in a signed 64-bit integer")?),
            );
        }
        for (key, v) in [
            ("bath.d0", self.d0),
            ("chain.j_over_w0", self.j_over_w0),
            ("chain.w1_over_w0", self.w1_over_w0),
            ("chain.kick_theta", self.kick_theta),
            ("bath.sigma", self.sigma),
            ("bath.drift_a", self.drift_a),
            ("bath.drift_b", self.drift_b),
        ] {
            if let Some(x) = v {
                put(key, V::Float(x));
            }
        }
        if self.d0_lambda_only {
            put("bath.d0_lambda_only", V::Boolean(true));
        }
        if self.kick_offset_pi4 {
            put("chain.kick_offset_pi4", V::Boolean(true));
        }
        for s in &self.set {
            o.push(parse_override(s)?);
        }
        Ok(o)
    }

    /// Spec for a single-run subcommand.
    fn single_spec(&self, command: &str) -> Result<ExperimentSpec> {
        let name = self.name.clone().unwrap_or_else(|| command.to_string());
        let o = self.overrides()?;
        let spec = match &self.config {
            Some(path) => {
                let mut o = o;
                o.push(("name".into(), toml::Value::String(name)));
                load_spec_file(path, &o)?
            }
            None => default_spec(&name, &o)?,
        };
        if spec.sweep.is_some() {
            bail!("`{command}` runs a single trajectory; use `experiment` for sweeps");
        }
        Ok(spec)
    }

    fn outdir(&self, spec: &ExperimentSpec) -> PathBuf {
        self.outdir.clone().unwrap_or_else(|| spec.outdir.clone())
    }
}

fn read_schedule(path: &Path) -> Result<KickSchedule> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(KickSchedule::read_csv(BufReader::new(f))?)
}

/// Loads `--schedule-file` and pins the spec to its shape.
fn attach_schedule(spec: &mut ExperimentSpec, file: &Option<PathBuf>) -> Result<Option<KickSchedule>> {
    let Some(path) = file else { return Ok(None) };
    let s = read_schedule(path)?;
    if s.n_spins() != spec.chain.n_spins {
        bail!(
            "schedule file has {} spins but the chain has {} (set --spins)",
            s.n_spins(),
            spec.chain.n_spins
        );
    }
    spec.n_periods = s.n_periods();
    spec.validate()?;
    Ok(Some(s))
}

fn single_run(command: &str, mut spec: ExperimentSpec, run: &RunArgs, schedule_file: &Option<PathBuf>) -> Result<()> {
    let start = Instant::now();
    let schedule = attach_schedule(&mut spec, schedule_file)?;
    let dest = run.outdir(&spec).join(&spec.name);
    if dest.exists() && !run.force {
        return Err(kickchain::Error::OutputExists(dest).into());
    }
    let seed = spec.bath.seed;
    let point = run_point(&spec, seed, schedule)?;
    let files = write_run_dir(&dest, run.force, |dir| write_point(&point, dir))?;
    let mut m = RunManifest::new(command, spec, vec![seed]);
    m.schedule_file = schedule_file.clone();
    m.finish(&dest, &files, start.elapsed().as_secs_f64())?;
    println!("{}", dest.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { run, schedule_file } => {
            let spec = run.single_spec("simulate")?;
            single_run("simulate", spec, &run, &schedule_file)
        }
        Command::Husimi {
            run,
            schedule_file,
            sites,
            at,
            theta_res,
            phi_res,
        } => {
            let mut spec = run.single_spec("husimi")?;
            if schedule_file.is_some() {
                attach_schedule(&mut spec, &schedule_file)?;
            }
            let periods = if at.is_empty() { vec![0, spec.n_periods] } else { at };
            spec.husimi = Some(HusimiOutput {
                spins: sites,
                periods,
                theta_res,
                phi_res,
            });
            spec.validate()?;
            single_run("husimi", spec, &run, &schedule_file)
        }
        Command::Schedule { run } => {
            let start = Instant::now();
            let spec = run.single_spec("schedule")?;
            let dest = run.outdir(&spec).join(&spec.name);
            let schedule = generate_schedule(&spec.bath, spec.chain.n_spins, spec.n_periods)?;
            let files = write_run_dir(&dest, run.force, |dir| {
                let path = dir.join("schedule.csv");
                let mut w = std::io::BufWriter::new(File::create(&path)?);
                schedule.write_csv(&mut w)?;
                std::io::Write::flush(&mut w)?;
                Ok(vec![PathBuf::from("schedule.csv")])
            })?;
            let seeds = vec![spec.bath.seed];
            RunManifest::new("schedule", spec, seeds).finish(&dest, &files, start.elapsed().as_secs_f64())?;
            println!("{}", dest.display());
            Ok(())
        }
        Command::Experiment { preset: name, run } => {
            let start = Instant::now();
            let mut o = run.overrides()?;
            if let Some(n) = &run.name {
                o.push(("name".into(), toml::Value::String(n.clone())));
            }
            let spec = match &run.config {
                Some(path) if name == "-" => load_spec_file(path, &o)?,
                Some(_) => bail!("use `experiment - --config <file>` to run a spec file"),
                None => preset(&name, &o)?,
            };
            let opts = RunOptions {
                outdir: Some(run.outdir(&spec)),
                force: run.force,
                jobs: run.jobs,
            };
            let (result, dest) = experiments::run_experiment(&spec, &opts)?;
            let seeds = spec.replicate_seeds();
            RunManifest::new("experiment", spec, seeds).finish(
                &dest,
                &result.artifacts,
                start.elapsed().as_secs_f64(),
            )?;
            println!("{}", dest.display());
            Ok(())
        }
        Command::Presets => {
            for p in list_presets() {
                println!("{}\t{}\t{}", p.name, p.figure, p.description);
            }
            Ok(())
        }
    }
}

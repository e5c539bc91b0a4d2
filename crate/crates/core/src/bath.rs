//! Classical kick bath on the torus T².
//!
//! Every spin receives its own kick train. The `i`-th kick of spin `n` is a
//! point `(lambda, phi)` on the torus: `lambda` is the kick strength and
//! `phi = w0 * tau` is the angular delay inside the period. The first kick of
//! every train is drawn from a box of side `d0` anchored at
//! `(lambda_star, phi_star)`, and later kicks follow one of four flows.
//!
//! Randomness is per spin: each spin owns a substream seeded from a hash of
//! `(seed, spin)`, so growing the chain never changes the trajectories of the
//! spins that were already there.

use std::f64::consts::{SQRT_2, TAU};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A kick on the torus: strength and angular delay, both in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub lambda: f64,
    pub phi: f64,
}

impl TorusPoint {
    /// Builds a point, reducing both coordinates mod 2π.
    pub fn new(lambda: f64, phi: f64) -> Self {
        Self {
            lambda: wrap_angle(lambda),
            phi: wrap_angle(phi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKind {
    /// Identity flow.
    Stationary,
    /// Irrational rotation `(λ + 2π/a, φ + 2π/b)`.
    Drift,
    /// Independent uniform draws from the Haar measure.
    Microcanonical,
    /// Gaussian random walk with per-coordinate variance `sigma`.
    Markovian,
}

impl BathKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BathKind::Stationary => "stationary",
            BathKind::Drift => "drift",
            BathKind::Microcanonical => "microcanonical",
            BathKind::Markovian => "markovian",
        }
    }
}

impl fmt::Display for BathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BathKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(BathKind::Stationary),
            "drift" => Ok(BathKind::Drift),
            "microcanonical" => Ok(BathKind::Microcanonical),
            "markovian" => Ok(BathKind::Markovian),
            other => Err(Error::UnknownBath(other.to_string())),
        }
    }
}

/// Parameters of the kick bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSpec {
    pub kind: BathKind,
    /// Divisor of the strength increment for the drift flow.
    pub drift_a: f64,
    /// Divisor of the delay increment for the drift flow.
    pub drift_b: f64,
    /// Variance of each Gaussian increment of the Markovian walk.
    pub sigma: f64,
    pub lambda_star: f64,
    pub phi_star: f64,
    /// Side of the box the first kicks are drawn from.
    pub d0: f64,
    /// Restrict the initial dispersion to the strength coordinate.
    pub d0_lambda_only: bool,
    pub seed: u64,
}

impl Default for BathSpec {
    fn default() -> Self {
        Self {
            kind: BathKind::Drift,
            drift_a: SQRT_2,
            drift_b: 3f64.sqrt(),
            sigma: 0.0,
            lambda_star: 2.0,
            phi_star: 1.0,
            d0: 0.0,
            d0_lambda_only: false,
            seed: 0,
        }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(invalid("sigma", format!("must be finite and >= 0, got {}", self.sigma)));
        }
        if !(self.d0.is_finite() && (0.0..=TAU).contains(&self.d0)) {
            return Err(invalid("d0", format!("must lie in [0, 2π], got {}", self.d0)));
        }
        for (name, v) in [("drift_a", self.drift_a), ("drift_b", self.drift_b)] {
            if !v.is_finite() || v == 0.0 {
                return Err(invalid(name, format!("must be finite and nonzero, got {v}")));
            }
        }
        for (name, v) in [("lambda_star", self.lambda_star), ("phi_star", self.phi_star)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Random substream owned by `spin` (1-based).
    pub fn spin_rng(&self, spin: usize) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(substream_seed(self.seed, spin as u64))
    }
}

/// Stream `index` for draws that are not part of a kick train, such as
/// random initial states. Disjoint from every [`BathSpec::spin_rng`] stream.
pub fn auxiliary_rng(seed: u64, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(substream_seed(seed ^ 0x5EED_A0C1_11A2_7001, index) ^ 0xA5A5_A5A5_A5A5_A5A5)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn substream_seed(seed: u64, spin: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(spin.wrapping_mul(0xD6E8_FEB8_6659_FD93)))
}

/// Draws one initial kick from the `d0` box.
///
/// Two uniforms are always consumed so that toggling `d0_lambda_only` keeps
/// the strength draws aligned.
pub fn sample_initial_point<R: Rng + ?Sized>(spec: &BathSpec, rng: &mut R) -> TorusPoint {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let phi_side = if spec.d0_lambda_only { 0.0 } else { spec.d0 };
    TorusPoint::new(spec.lambda_star + spec.d0 * u, spec.phi_star + phi_side * v)
}

/// First kick of each of `n_spins` trains, drawn from the per-spin substreams.
pub fn sample_initial(spec: &BathSpec, n_spins: usize) -> Vec<TorusPoint> {
    (1..=n_spins)
        .map(|spin| sample_initial_point(spec, &mut spec.spin_rng(spin)))
        .collect()
}

/// One application of the bath flow.
pub fn step<R: Rng + ?Sized>(point: TorusPoint, spec: &BathSpec, rng: &mut R) -> TorusPoint {
    match spec.kind {
        BathKind::Stationary => point,
        BathKind::Drift => TorusPoint::new(point.lambda + TAU / spec.drift_a, point.phi + TAU / spec.drift_b),
        BathKind::Microcanonical => {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            TorusPoint::new(TAU * u, TAU * v)
        }
        BathKind::Markovian => {
            let sd = spec.sigma.sqrt();
            let dl: f64 = rng.sample(StandardNormal);
            let dp: f64 = rng.sample(StandardNormal);
            TorusPoint::new(point.lambda + sd * dl, point.phi + sd * dp)
        }
    }
}

/// The kicks received by every spin over `n_periods` periods.
#[derive(Debug, Clone, PartialEq)]
pub struct KickSchedule {
    n_spins: usize,
    n_periods: usize,
    // spin-major: entries[(spin - 1) * n_periods + period]
    entries: Vec<TorusPoint>,
}

impl KickSchedule {
    /// Builds a schedule from spin-major rows, one `Vec` per spin.
    pub fn from_rows(rows: Vec<Vec<TorusPoint>>) -> Result<Self> {
        let n_spins = rows.len();
        let n_periods = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_periods) {
            return Err(Error::Schedule("ragged rows".into()));
        }
        let entries = rows
            .into_iter()
            .flatten()
            .map(|p| TorusPoint::new(p.lambda, p.phi))
            .collect();
        Ok(Self {
            n_spins,
            n_periods,
            entries,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    /// Kick of `spin` (1-based) during `period` (0-based).
    pub fn point(&self, spin: usize, period: usize) -> TorusPoint {
        assert!(spin >= 1 && spin <= self.n_spins, "spin {spin} out of range");
        assert!(period < self.n_periods, "period {period} out of range");
        self.entries[(spin - 1) * self.n_periods + period]
    }

    /// Whole train of one spin (1-based).
    pub fn spin_train(&self, spin: usize) -> &[TorusPoint] {
        let start = (spin - 1) * self.n_periods;
        &self.entries[start..start + self.n_periods]
    }

    /// Kicks of all spins for one period, ordered by spin.
    pub fn period(&self, period: usize) -> Vec<TorusPoint> {
        (1..=self.n_spins).map(|s| self.point(s, period)).collect()
    }

    /// Writes `spin,period,lambda,phi` rows, period-major, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "spin,period,lambda,phi")?;
        for period in 0..self.n_periods {
            for spin in 1..=self.n_spins {
                let p = self.point(spin, period);
                writeln!(out, "{spin},{period},{:.16e},{:.16e}", p.lambda, p.phi)?;
            }
        }
        Ok(())
    }

    /// Reads a schedule written by [`KickSchedule::write_csv`]; row order is free
    /// but every `(spin, period)` pair must appear exactly once.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Schedule("empty file".into()))??;
        if header.trim() != "spin,period,lambda,phi" {
            return Err(Error::Schedule(format!("unexpected header `{}`", header.trim())));
        }
        let mut raw = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Schedule(format!("line {}: `{line}`", lineno + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad());
            }
            let spin: usize = fields[0].parse().map_err(|_| bad())?;
            let period: usize = fields[1].parse().map_err(|_| bad())?;
            let lambda: f64 = fields[2].parse().map_err(|_| bad())?;
            let phi: f64 = fields[3].parse().map_err(|_| bad())?;
            if spin == 0 || !lambda.is_finite() || !phi.is_finite() {
                return Err(bad());
            }
            raw.push((spin, period, TorusPoint::new(lambda, phi)));
        }
        let n_spins = raw.iter().map(|r| r.0).max().unwrap_or(0);
        let n_periods = raw.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        if n_spins == 0 || n_periods == 0 || raw.len() != n_spins * n_periods {
            return Err(Error::Schedule(format!(
                "{} rows do not form a complete {n_spins}x{n_periods} grid",
                raw.len()
            )));
        }
        let mut slots: Vec<Option<TorusPoint>> = vec![None; n_spins * n_periods];
        for (spin, period, p) in raw {
            let slot = &mut slots[(spin - 1) * n_periods + period];
            if slot.is_some() {
                return Err(Error::Schedule(format!("duplicate row spin={spin} period={period}")));
            }
            *slot = Some(p);
        }
        Ok(Self {
            n_spins,
            n_periods,
            entries: slots.into_iter().map(|p| p.expect("grid is complete")).collect(),
        })
    }
}

/// Generates the kick schedule of `n_spins` trains over `n_periods` periods.
///
/// Period 0 holds the initial draws; period `i + 1` is the flow applied to
/// period `i`, spin by spin.
pub fn generate_schedule(spec: &BathSpec, n_spins: usize, n_periods: usize) -> Result<KickSchedule> {
    spec.validate()?;
    if n_spins == 0 {
        return Err(invalid("n_spins", "must be >= 1"));
    }
    if n_periods == 0 {
        return Err(invalid("n_periods", "must be >= 1"));
    }
    let mut entries = Vec::with_capacity(n_spins * n_periods);
    for spin in 1..=n_spins {
        let mut rng = spec.spin_rng(spin);
        let mut p = sample_initial_point(spec, &mut rng);
        entries.push(p);
        for _ in 1..n_periods {
            p = step(p, spec, &mut rng);
            entries.push(p);
        }
    }
    Ok(KickSchedule {
        n_spins,
        n_periods,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(kind: BathKind) -> BathSpec {
        BathSpec {
            kind,
            seed: 11,
            ..BathSpec::default()
        }
    }

    fn ks_uniform(samples: &mut [f64]) -> f64 {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = x / TAU;
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    // asymptotic Kolmogorov critical value at p = 0.01
    fn ks_crit(n: usize) -> f64 {
        1.628 / (n as f64).sqrt()
    }

    #[test]
    fn zero_width_box_repeats_anchor() {
        let s = BathSpec {
            lambda_star: 1.0,
            phi_star: 2.0,
            d0: 0.0,
            ..spec(BathKind::Stationary)
        };
        let pts = sample_initial(&s, 3);
        assert_eq!(pts, vec![TorusPoint { lambda: 1.0, phi: 2.0 }; 3]);
    }

    #[test]
    fn full_box_has_uniform_marginals() {
        let s = BathSpec {
            d0: TAU,
            ..spec(BathKind::Stationary)
        };
        let pts = sample_initial(&s, 10_000);
        let mut l: Vec<f64> = pts.iter().map(|p| p.lambda).collect();
        let mut p: Vec<f64> = pts.iter().map(|p| p.phi).collect();
        assert!(ks_uniform(&mut l) < ks_crit(10_000));
        assert!(ks_uniform(&mut p) < ks_crit(10_000));
    }

    #[test]
    fn lambda_only_dispersion_pins_delay() {
        let s = BathSpec {
            d0: 0.5,
            d0_lambda_only: true,
            ..spec(BathKind::Stationary)
        };
        for p in sample_initial(&s, 50) {
            assert_eq!(p.phi, s.phi_star);
            assert!(p.lambda >= s.lambda_star && p.lambda <= s.lambda_star + 0.5);
        }
    }

    #[test]
    fn flows_match_their_formulas() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let p = TorusPoint::new(0.3, 1.1);
        assert_eq!(step(p, &spec(BathKind::Stationary), &mut rng), p);

        let d = BathSpec {
            drift_a: SQRT_2,
            drift_b: SQRT_2,
            ..spec(BathKind::Drift)
        };
        let q = step(TorusPoint::new(0.0, 0.0), &d, &mut rng);
        assert_abs_diff_eq!(q.lambda, 4.442882938158366, epsilon = 1e-6);
        assert_abs_diff_eq!(q.phi, 4.442882938158366, epsilon = 1e-6);

        let m = BathSpec {
            sigma: 0.0,
            ..spec(BathKind::Markovian)
        };
        assert_eq!(step(p, &m, &mut rng), p);
    }

    #[test]
    fn stationary_schedule_is_constant() {
        let s = spec(BathKind::Stationary);
        let sched = generate_schedule(&s, 4, 7).unwrap();
        for spin in 1..=4 {
            for i in 0..7 {
                assert_eq!(sched.point(spin, i), TorusPoint::new(2.0, 1.0));
            }
        }
    }

    #[test]
    fn drift_schedule_iterates_rotation() {
        let s = BathSpec {
            drift_a: SQRT_2,
            drift_b: SQRT_2,
            ..spec(BathKind::Drift)
        };
        let sched = generate_schedule(&s, 2, 3).unwrap();
        for k in 0..3 {
            let inc = k as f64 * TAU / SQRT_2;
            let expected = TorusPoint::new(2.0 + inc, 1.0 + inc);
            let got = sched.point(1, k);
            assert_abs_diff_eq!(got.lambda, expected.lambda, epsilon = 1e-12);
            assert_abs_diff_eq!(got.phi, expected.phi, epsilon = 1e-12);
        }
    }

    #[test]
    fn adding_spins_keeps_existing_trains() {
        let s = BathSpec {
            d0: 1.0,
            sigma: 0.1,
            ..spec(BathKind::Markovian)
        };
        let small = generate_schedule(&s, 3, 20).unwrap();
        let large = generate_schedule(&s, 6, 20).unwrap();
        for spin in 1..=3 {
            assert_eq!(small.spin_train(spin), large.spin_train(spin));
        }
    }

    #[test]
    fn drift_orbit_is_injective_and_equidistributed() {
        let s = BathSpec {
            lambda_star: 0.0,
            phi_star: 0.0,
            ..spec(BathKind::Drift)
        };
        let sched = generate_schedule(&s, 1, 10_000).unwrap();
        let mut lam: Vec<f64> = sched.spin_train(1).iter().map(|p| p.lambda).collect();
        let (re, im) = lam.iter().fold((0.0, 0.0), |(re, im), &l| (re + l.cos(), im + l.sin()));
        let mean = (re * re + im * im).sqrt() / lam.len() as f64;
        assert!(mean < 0.05, "|mean exp(iλ)| = {mean}");
        lam.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min_gap = lam.windows(2).map(|w| w[1] - w[0]).fold(f64::MAX, f64::min);
        assert!(min_gap > 0.0);
    }

    #[test]
    fn markovian_at_zero_sigma_equals_stationary() {
        let base = BathSpec {
            d0: 0.7,
            ..BathSpec::default()
        };
        let a = generate_schedule(
            &BathSpec {
                kind: BathKind::Markovian,
                sigma: 0.0,
                ..base.clone()
            },
            4,
            30,
        )
        .unwrap();
        let b = generate_schedule(
            &BathSpec {
                kind: BathKind::Stationary,
                ..base
            },
            4,
            30,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn microcanonical_draws_are_uniform_and_uncorrelated() {
        let s = spec(BathKind::Microcanonical);
        let sched = generate_schedule(&s, 1, 10_001).unwrap();
        let train = &sched.spin_train(1)[1..];
        let mut lam: Vec<f64> = train.iter().map(|p| p.lambda).collect();
        let mut phi: Vec<f64> = train.iter().map(|p| p.phi).collect();

        // lag-1 circular correlation (Fisher–Lee)
        let circ = |xs: &[f64]| {
            let (a, b): (Vec<f64>, Vec<f64>) = xs.windows(2).map(|w| (w[0], w[1])).unzip();
            let mean = |v: &[f64]| {
                let (s, c) = v.iter().fold((0.0, 0.0), |(s, c), x| (s + x.sin(), c + x.cos()));
                s.atan2(c)
            };
            let (ma, mb) = (mean(&a), mean(&b));
            let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma).sin() * (y - mb).sin()).sum();
            let da: f64 = a.iter().map(|x| (x - ma).sin().powi(2)).sum();
            let db: f64 = b.iter().map(|y| (y - mb).sin().powi(2)).sum();
            num / (da * db).sqrt()
        };
        assert!(circ(&lam).abs() < 0.05);
        assert!(circ(&phi).abs() < 0.05);
        assert!(ks_uniform(&mut lam) < ks_crit(10_000));
        assert!(ks_uniform(&mut phi) < ks_crit(10_000));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = BathSpec {
            d0: 1.3,
            sigma: 0.05,
            ..spec(BathKind::Markovian)
        };
        let sched = generate_schedule(&s, 3, 5).unwrap();
        let mut buf = Vec::new();
        sched.write_csv(&mut buf).unwrap();
        let back = KickSchedule::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, sched);
    }

    #[test]
    fn csv_rejects_incomplete_grid() {
        let text = "spin,period,lambda,phi\n1,0,0.1,0.2\n2,1,0.1,0.2\n";
        assert!(matches!(
            KickSchedule::read_csv(text.as_bytes()),
            Err(Error::Schedule(_))
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = BathSpec {
            sigma: -1.0,
            ..BathSpec::default()
        };
        assert!(generate_schedule(&bad, 2, 2).is_err());
        let bad = BathSpec {
            d0: 7.0,
            ..BathSpec::default()
        };
        assert!(generate_schedule(&bad, 2, 2).is_err());
        let bad = BathSpec {
            drift_a: 0.0,
            ..BathSpec::default()
        };
        assert!(generate_schedule(&bad, 2, 2).is_err());
    }

    #[test]
    fn wrap_angle_stays_in_range() {
        for x in [-1e-18, -TAU, TAU, 3.0 * TAU + 0.5, -0.25] {
            let w = wrap_angle(x);
            assert!((0.0..TAU).contains(&w), "{x} -> {w}");
        }
    }
}

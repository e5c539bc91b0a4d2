//! Reduced density matrices and the quantities read off them.
//!
//! Densities use the trace-one convention `ρ = |ψ⟩⟨ψ|`; entropies are in
//! bits, so a single spin has at most one bit of entropy.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::chain::{Op2, StateVector};
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as exact zeros in entropies.
pub const EIGEN_CLAMP: f64 = 1e-14;

/// Negative eigenvalues beyond this reject a density as non-positive.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// 2×2 density matrix of one spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDensity(pub Op2);

impl ReducedDensity {
    pub fn pure(up: C64, down: C64) -> Self {
        let v = nalgebra::Vector2::new(up, down);
        Self(v * v.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self(Op2::identity() * C64::new(0.5, 0.0))
    }

    pub fn matrix(&self) -> &Op2 {
        &self.0
    }

    /// `⟨↑|ρ|↑⟩`.
    pub fn population_up(&self) -> f64 {
        self.0[(0, 0)].re
    }

    /// `|⟨↑|ρ|↓⟩|`.
    pub fn coherence(&self) -> f64 {
        self.0[(0, 1)].norm()
    }

    pub fn trace(&self) -> f64 {
        self.0[(0, 0)].re + self.0[(1, 1)].re
    }

    /// Closed-form eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = self.0[(0, 1)];
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_of_spectrum(&self.eigenvalues()).min(1.0)
    }
}

fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    let s: f64 = eigenvalues
        .iter()
        .filter(|&&p| p > EIGEN_CLAMP)
        .map(|&p| -p * p.log2())
        .sum();
    s.max(0.0)
}

/// Partial trace over every spin except `site` (1-based).
pub fn reduce(state: &StateVector, site: usize) -> Result<ReducedDensity> {
    let n = state.n_spins();
    if site == 0 || site > n {
        return Err(Error::SiteOutOfRange { site, n_spins: n });
    }
    let amps = state.amplitudes();
    let stride = 1usize << (n - site);
    let (mut uu, mut dd, mut ud) = (0.0, 0.0, C64::new(0.0, 0.0));
    for base in (0..amps.len()).step_by(2 * stride) {
        for i in base..base + stride {
            let up = amps[i];
            let down = amps[i + stride];
            uu += up.norm_sqr();
            dd += down.norm_sqr();
            ud += up * down.conj();
        }
    }
    Ok(ReducedDensity(Op2::new(
        C64::new(uu, 0.0),
        ud,
        ud.conj(),
        C64::new(dd, 0.0),
    )))
}

/// Reduced densities of every spin, spin 1 first.
pub fn reduce_all(state: &StateVector) -> Vec<ReducedDensity> {
    (1..=state.n_spins())
        .map(|site| reduce(state, site).expect("site in range"))
        .collect()
}

/// Density of the average spin, `(1/N) Σ ρ_n`.
pub fn average_spin(rhos: &[ReducedDensity]) -> Result<ReducedDensity> {
    if rhos.is_empty() {
        return Err(Error::EmptyAverage);
    }
    let sum = rhos.iter().fold(Op2::zeros(), |acc, r| acc + r.0);
    Ok(ReducedDensity(sum / C64::new(rhos.len() as f64, 0.0)))
}

/// Von Neumann entropy in bits of a density matrix of any dimension.
pub fn vn_entropy(rho: &DMatrix<C64>) -> Result<f64> {
    let dim = rho.nrows();
    if rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho.ncols(),
        });
    }
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPositive(min));
    }
    let spectrum: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    Ok(entropy_of_spectrum(&spectrum).min((dim as f64).log2()))
}

/// Entropy of the average spin of the chain.
pub fn chain_entropy(state: &StateVector) -> f64 {
    average_spin(&reduce_all(state)).expect("chain has spins").entropy()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinObservables {
    pub pop_up: f64,
    pub coherence: f64,
    pub entropy: f64,
}

/// Everything measured on one stroboscopic state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodObservables {
    pub period: usize,
    pub spins: Vec<SpinObservables>,
    /// Entropy of the average spin.
    pub s_tot: f64,
    /// Population of the average spin.
    pub pop_avg: f64,
    /// Coherence of the average spin.
    pub coh_avg: f64,
}

pub fn measure(state: &StateVector, period: usize) -> PeriodObservables {
    let rhos = reduce_all(state);
    let avg = average_spin(&rhos).expect("chain has spins");
    PeriodObservables {
        period,
        spins: rhos
            .iter()
            .map(|r| SpinObservables {
                pop_up: r.population_up(),
                coherence: r.coherence(),
                entropy: r.entropy(),
            })
            .collect(),
        s_tot: avg.entropy(),
        pop_avg: avg.population_up(),
        coh_avg: avg.coherence(),
    }
}

/// Observable time series of one trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub periods: Vec<PeriodObservables>,
}

impl ObservableRecord {
    pub fn push(&mut self, obs: PeriodObservables) {
        self.periods.push(obs);
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn get(&self, period: usize) -> Option<&PeriodObservables> {
        self.periods.iter().find(|p| p.period == period)
    }

    /// Series of one spin quantity (spin is 1-based).
    pub fn spin_series(&self, spin: usize, f: impl Fn(&SpinObservables) -> f64) -> Vec<f64> {
        self.periods.iter().map(|p| f(&p.spins[spin - 1])).collect()
    }

    /// `period,spin,pop_up,coherence,entropy_spin`.
    pub fn write_spin_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "period,spin,pop_up,coherence,entropy_spin")?;
        for p in &self.periods {
            for (k, s) in p.spins.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{:.16e},{:.16e},{:.16e}",
                    p.period,
                    k + 1,
                    s.pop_up,
                    s.coherence,
                    s.entropy
                )?;
            }
        }
        Ok(())
    }

    /// `period,S_tot,pop_avg,coh_avg`.
    pub fn write_chain_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "period,S_tot,pop_avg,coh_avg")?;
        for p in &self.periods {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e}",
                p.period, p.s_tot, p.pop_avg, p.coh_avg
            )?;
        }
        Ok(())
    }
}

/// Husimi function sampled on a uniform `(θ, φ)` grid.
///
/// `θ` runs over `[0, π]` endpoints included, `φ` over `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    theta_res: usize,
    phi_res: usize,
    // row-major: values[j * phi_res + k] at (theta_j, phi_k)
    values: Vec<f64>,
}

impl HusimiGrid {
    pub fn theta_res(&self) -> usize {
        self.theta_res
    }

    pub fn phi_res(&self) -> usize {
        self.phi_res
    }

    pub fn theta(&self, j: usize) -> f64 {
        PI * j as f64 / (self.theta_res - 1) as f64
    }

    pub fn phi(&self, k: usize) -> f64 {
        TAU * k as f64 / self.phi_res as f64
    }

    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.phi_res + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Azimuthal equidistant coordinates: north pole at the centre, south
    /// pole on the circle of radius π.
    pub fn disk_coords(&self, j: usize, k: usize) -> (f64, f64) {
        let (t, p) = (self.theta(j), self.phi(k));
        (t * p.cos(), t * p.sin())
    }

    /// Grid index `(j, k)` of the largest value (first one on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let (idx, _) =
            self.values.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (i, &v)| if v > best.1 { (i, v) } else { best },
            );
        (idx / self.phi_res, idx % self.phi_res)
    }

    /// `(1/2π) ∬ H sinθ dθ dφ`: Clenshaw–Curtis in `cos θ`, rectangle rule in `φ`.
    pub fn normalization(&self) -> f64 {
        let w = clenshaw_curtis_weights(self.theta_res - 1);
        let dphi = TAU / self.phi_res as f64;
        let mut total = 0.0;
        for (j, wj) in w.iter().enumerate() {
            let row: f64 = self.values[j * self.phi_res..(j + 1) * self.phi_res].iter().sum();
            total += wj * row * dphi;
        }
        total / TAU
    }

    /// One-line JSON header followed by `theta_res` rows of `phi_res` values.
    pub fn write_csv<W: Write>(&self, mut out: W, spin: usize, period: usize) -> Result<()> {
        let header = serde_json::json!({
            "theta_res": self.theta_res,
            "phi_res": self.phi_res,
            "spin": spin,
            "period": period,
        });
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for j in 0..self.theta_res {
            let row: Vec<String> = (0..self.phi_res)
                .map(|k| format!("{:.16e}", self.value(j, k)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Clenshaw–Curtis weights on the nodes `cos(jπ/m)`, `j = 0..=m`, for `∫_{-1}^{1}`.
pub fn clenshaw_curtis_weights(m: usize) -> Vec<f64> {
    assert!(m >= 1);
    let mf = m as f64;
    (0..=m)
        .map(|j| {
            let c = if j == 0 || j == m { 1.0 } else { 2.0 };
            let mut s = 1.0;
            for k in 1..=m / 2 {
                let b = if 2 * k == m { 1.0 } else { 2.0 };
                s -= b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * PI * (j * k) as f64 / mf).cos();
            }
            c * s / mf
        })
        .collect()
}

/// `H(θ,φ) = ⟨θ,φ|ρ|θ,φ⟩` with `|θ,φ⟩ = cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩`.
pub fn husimi_value(rho: &ReducedDensity, theta: f64, phi: f64) -> f64 {
    // c²ρ00 + s²ρ11 + 2cs Re(e^{iφ}ρ01) rewritten in θ so that every term
    // but the trace vanishes for diag(1/2, 1/2)
    let m = rho.matrix();
    let (p, q) = (m[(0, 0)].re, m[(1, 1)].re);
    let off = (C64::from_polar(1.0, phi) * m[(0, 1)]).re;
    (0.5 * (p + q) + 0.5 * theta.cos() * (p - q) + theta.sin() * off).clamp(0.0, 1.0)
}

pub fn husimi(rho: &ReducedDensity, theta_res: usize, phi_res: usize) -> Result<HusimiGrid> {
    if theta_res < 2 || phi_res < 2 {
        return Err(Error::HusimiResolution { theta_res, phi_res });
    }
    let mut grid = HusimiGrid {
        theta_res,
        phi_res,
        values: Vec::with_capacity(theta_res * phi_res),
    };
    for j in 0..theta_res {
        let theta = grid.theta(j);
        for k in 0..phi_res {
            let v = husimi_value(rho, theta, grid.phi(k));
            grid.values.push(v);
        }
    }
    Ok(grid)
}

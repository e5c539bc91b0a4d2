#![allow(dead_code)]

use std::f64::consts::TAU;

use kickchain::bath::{generate_schedule, BathKind, BathSpec, KickSchedule, TorusPoint};
use kickchain::chain::{ChainConfig, Coupling, SpinState};
use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KINDS: [BathKind; 4] = [
    BathKind::Stationary,
    BathKind::Drift,
    BathKind::Microcanonical,
    BathKind::Markovian,
];
pub const COUPLINGS: [Coupling; 4] = [Coupling::Heisenberg, Coupling::IsingZ, Coupling::IsingX, Coupling::None];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_spin<R: Rng>(rng: &mut R) -> SpinState {
    let (t, p): (f64, f64) = (rng.random_range(0.0..std::f64::consts::PI), rng.random_range(0.0..TAU));
    SpinState::new(C64::new((0.5 * t).cos(), 0.0), C64::from_polar((0.5 * t).sin(), p))
}

/// Random chain and bath drawn from `rng`.
pub fn random_setup<R: Rng>(rng: &mut R, n: usize, n_periods: usize) -> (ChainConfig, KickSchedule) {
    let cfg = ChainConfig {
        n_spins: n,
        coupling: COUPLINGS[rng.random_range(0..4)],
        j_over_w0: rng.random_range(-2.0..2.0),
        w1_over_w0: rng.random_range(0.0..2.0),
        kick_theta: rng.random_range(0.0..TAU),
        kick_offset_pi4: rng.random_bool(0.5),
        initial_states: (0..n).map(|_| random_spin(rng)).collect(),
    };
    let bath = BathSpec {
        kind: KINDS[rng.random_range(0..4)],
        sigma: rng.random_range(0.0..0.5),
        lambda_star: rng.random_range(0.0..TAU),
        phi_star: rng.random_range(0.0..TAU),
        d0: rng.random_range(0.0..TAU),
        seed: rng.random(),
        ..Default::default()
    };
    let schedule = generate_schedule(&bath, n, n_periods).unwrap();
    (cfg, schedule)
}

/// Exact 2×2 evolution of one isolated spin through its kick train.
pub fn single_spin_trajectory(state: SpinState, w1_over_w0: f64, w: (f64, f64), kicks: &[TorusPoint]) -> Vec<[C64; 2]> {
    let free = |dt: f64| {
        Matrix2::new(
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::from_polar(1.0, -0.5 * w1_over_w0 * dt),
        )
    };
    let (c, s) = w;
    let proj = Matrix2::new(
        C64::new(c * c, 0.0),
        C64::new(c * s, 0.0),
        C64::new(c * s, 0.0),
        C64::new(s * s, 0.0),
    );
    let mut psi = nalgebra::Vector2::new(state.up, state.down);
    let mut out = vec![[psi[0], psi[1]]];
    for k in kicks {
        let kick = Matrix2::identity() + proj * (C64::from_polar(1.0, -k.lambda) - 1.0);
        psi = free(TAU - k.phi) * kick * free(k.phi) * psi;
        out.push([psi[0], psi[1]]);
    }
    out
}

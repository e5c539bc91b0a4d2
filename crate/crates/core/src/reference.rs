//! Event-timeline oracle for the monodromy operator.
//!
//! Used by the test suites only. Every kick of a period is placed on one
//! global timeline over `[0, 2π)`; the state is integrated from event to
//! event with exact free evolution, and each kick is the dense embedded
//! matrix `exp(-iλ W)` built from the spectral decomposition of `W`. Nothing
//! here reuses the sequencing or the strided kick sweep of
//! [`crate::propagator`].

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::bath::TorusPoint;
use crate::chain::{diagonalize, embed_single_site, free_evolution_apply, Op2, SpectralDecomp, StateVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickEvent {
    pub time: f64,
    /// 1-based spin.
    pub site: usize,
    pub strength: f64,
}

/// Kick events of one period in non-decreasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTimeline {
    events: Vec<KickEvent>,
}

impl EventTimeline {
    pub fn new(mut events: Vec<KickEvent>, n_spins: usize) -> Result<Self> {
        let mut seen = vec![false; n_spins];
        for e in &events {
            if e.site == 0 || e.site > n_spins {
                return Err(Error::SiteOutOfRange { site: e.site, n_spins });
            }
            if seen[e.site - 1] {
                return Err(Error::Schedule(format!("site {} kicked twice in one period", e.site)));
            }
            seen[e.site - 1] = true;
            if !(0.0..TAU).contains(&e.time) {
                return Err(Error::Schedule(format!("event time {} outside [0, 2π)", e.time)));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Schedule("every site needs exactly one kick".into()));
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.site.cmp(&b.site)));
        Ok(Self { events })
    }

    /// Timeline with the kick of spin `k + 1` at time `kicks[k].phi`.
    pub fn from_kicks(kicks: &[TorusPoint]) -> Self {
        let events = kicks
            .iter()
            .enumerate()
            .map(|(k, p)| KickEvent {
                time: p.phi,
                site: k + 1,
                strength: p.lambda,
            })
            .collect();
        Self::new(events, kicks.len()).expect("torus points are valid events")
    }

    pub fn events(&self) -> &[KickEvent] {
        &self.events
    }
}

/// `exp(-iλ W)` from the eigenbasis of `W`.
fn kick_exponential(strength: f64, w: &Op2) -> Op2 {
    let wd = nalgebra::DMatrix::from_fn(2, 2, |r, c| w[(r, c)]);
    let decomp = diagonalize(&wd).expect("projector is Hermitian");
    let v = decomp.eigenvectors();
    let mut out = Op2::zeros();
    for (k, &mu) in decomp.eigenvalues().iter().enumerate() {
        let phase = C64::from_polar(1.0, -strength * mu);
        for r in 0..2 {
            for c in 0..2 {
                out[(r, c)] += phase * v[(r, k)] * v[(c, k)].conj();
            }
        }
    }
    out
}

/// One period integrated along the event timeline.
pub fn oracle_period(state: &StateVector, timeline: &EventTimeline, decomp: &SpectralDecomp, w: &Op2) -> StateVector {
    let n = state.n_spins();
    let mut psi = state.clone();
    let mut now = 0.0;
    for e in timeline.events() {
        psi = free_evolution_apply(decomp, e.time - now, &psi);
        now = e.time;
        let dense = embed_single_site(&kick_exponential(e.strength, w), e.site, n).expect("validated site");
        let v: DVector<C64> = dense * psi.to_dvector();
        psi = StateVector::from_amplitudes(n, v.iter().copied().collect()).expect("same dimension");
    }
    free_evolution_apply(decomp, TAU - now, &psi)
}

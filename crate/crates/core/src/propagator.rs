//! Monodromy operator of one kick period and the stroboscopic evolution.
//!
//! Within a period the spins are visited in order of increasing delay. The
//! state first evolves freely up to the smallest delay, then each spin gets
//! its kick `id + (e^{-iλ} - 1) W` followed by free evolution up to the next
//! delay, and a final free segment closes the period at `θ = 2π`.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::bath::{KickSchedule, TorusPoint};
use crate::chain::{
    build_kick_projector, build_static_hamiltonian, diagonalize, ChainConfig, Op2, SpectralDecomp, StateVector,
};
use crate::error::{Error, Result};
use crate::observables::{measure, ObservableRecord};

/// `id + (e^{-iλ} - 1) W`.
pub fn kick_unitary(lambda: f64, w: &Op2) -> Op2 {
    Op2::identity() + w * (C64::from_polar(1.0, -lambda) - 1.0)
}

/// The kicks of one period together with the delay-sorted visiting order.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodKicks {
    kicks: Vec<TorusPoint>,
    order: Vec<usize>,
}

impl PeriodKicks {
    /// `kicks[k]` belongs to spin `k + 1`. Ties in delay keep ascending spin order.
    pub fn new(kicks: Vec<TorusPoint>) -> Self {
        let mut order: Vec<usize> = (1..=kicks.len()).collect();
        order.sort_by(|&a, &b| kicks[a - 1].phi.total_cmp(&kicks[b - 1].phi));
        Self { kicks, order }
    }

    pub fn from_schedule(schedule: &KickSchedule, period: usize) -> Self {
        Self::new(schedule.period(period))
    }

    pub fn kick(&self, spin: usize) -> TorusPoint {
        self.kicks[spin - 1]
    }

    /// 1-based spins in ascending delay.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn n_spins(&self) -> usize {
        self.kicks.len()
    }
}

/// Applies one monodromy operator in place.
pub fn apply_monodromy_in_place(state: &mut StateVector, kicks: &PeriodKicks, decomp: &SpectralDecomp, w: &Op2) {
    assert_eq!(kicks.n_spins(), state.n_spins(), "kick count does not match the chain");
    let mut clock = 0.0;
    for &spin in kicks.order() {
        let kick = kicks.kick(spin);
        decomp.evolve_in_place(kick.phi - clock, state.amplitudes_mut());
        clock = kick.phi;
        if kick.lambda != 0.0 {
            state
                .apply_single_site(&kick_unitary(kick.lambda, w), spin)
                .expect("spin index comes from the kick list");
        }
    }
    decomp.evolve_in_place(TAU - clock, state.amplitudes_mut());
}

pub fn apply_monodromy(state: &StateVector, kicks: &PeriodKicks, decomp: &SpectralDecomp, w: &Op2) -> StateVector {
    let mut out = state.clone();
    apply_monodromy_in_place(&mut out, kicks, decomp, w);
    out
}

/// Precomputed pieces shared by every period of a run.
#[derive(Debug, Clone)]
pub struct Propagator {
    decomp: SpectralDecomp,
    projector: Op2,
    n_spins: usize,
}

impl Propagator {
    pub fn new(config: &ChainConfig) -> Result<Self> {
        config.validate()?;
        let h = build_static_hamiltonian(config)?;
        Ok(Self {
            decomp: diagonalize(&h)?,
            projector: build_kick_projector(config),
            n_spins: config.n_spins,
        })
    }

    pub fn decomp(&self) -> &SpectralDecomp {
        &self.decomp
    }

    pub fn projector(&self) -> &Op2 {
        &self.projector
    }

    pub fn step(&self, state: &mut StateVector, kicks: &PeriodKicks) {
        apply_monodromy_in_place(state, kicks, &self.decomp, &self.projector);
    }

    /// Runs every period of `schedule` from `initial`, calling `observe` on
    /// the state at each stroboscopic time `0..=K`.
    pub fn run<F>(&self, initial: StateVector, schedule: &KickSchedule, mut observe: F) -> Result<StateVector>
    where
        F: FnMut(usize, &StateVector),
    {
        if schedule.n_spins() != self.n_spins {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins,
                found: schedule.n_spins(),
            });
        }
        let mut state = initial;
        observe(0, &state);
        for period in 0..schedule.n_periods() {
            self.step(&mut state, &PeriodKicks::from_schedule(schedule, period));
            observe(period + 1, &state);
        }
        Ok(state)
    }
}

/// Stroboscopic states `ψ^(0) ..= ψ^(K)` of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: ChainConfig,
    pub schedule: Option<KickSchedule>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn n_periods(&self) -> usize {
        self.states.len() - 1
    }

    pub fn record(&self) -> ObservableRecord {
        let mut rec = ObservableRecord::default();
        for (i, s) in self.states.iter().enumerate() {
            rec.push(measure(s, i));
        }
        rec
    }
}

/// Full-state evolution of `config` under `schedule`.
pub fn evolve(config: &ChainConfig, schedule: &KickSchedule) -> Result<Trajectory> {
    let prop = Propagator::new(config)?;
    let mut states = Vec::with_capacity(schedule.n_periods() + 1);
    prop.run(StateVector::product(&config.initial_states), schedule, |_, s| {
        states.push(s.clone())
    })?;
    Ok(Trajectory {
        config: config.clone(),
        schedule: Some(schedule.clone()),
        states,
    })
}

/// A trajectory with no kicks at all: `K` periods of pure free evolution.
pub fn evolve_free(config: &ChainConfig, n_periods: usize) -> Result<Trajectory> {
    let prop = Propagator::new(config)?;
    let mut state = StateVector::product(&config.initial_states);
    let mut states = vec![state.clone()];
    for _ in 0..n_periods {
        prop.decomp.evolve_in_place(TAU, state.amplitudes_mut());
        states.push(state.clone());
    }
    Ok(Trajectory {
        config: config.clone(),
        schedule: None,
        states,
    })
}

/// Default cap on stored states before switching to observables only.
pub const DEFAULT_MEMORY_BUDGET: usize = 512 * 1024 * 1024;

/// Result of [`simulate`]: the observables always, the states when they fit.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub record: ObservableRecord,
    pub trajectory: Option<Trajectory>,
}

/// Evolves and measures in one pass. States are kept only if
/// `(K + 1) · 2^N` amplitudes fit in `memory_budget` bytes.
pub fn simulate(config: &ChainConfig, schedule: &KickSchedule, memory_budget: usize) -> Result<Simulation> {
    let prop = Propagator::new(config)?;
    let bytes = (schedule.n_periods() + 1)
        .saturating_mul(config.dim())
        .saturating_mul(std::mem::size_of::<C64>());
    let keep = bytes <= memory_budget;
    let mut record = ObservableRecord::default();
    let mut states = Vec::new();
    prop.run(StateVector::product(&config.initial_states), schedule, |i, s| {
        record.push(measure(s, i));
        if keep {
            states.push(s.clone());
        }
    })?;
    Ok(Simulation {
        record,
        trajectory: keep.then(|| Trajectory {
            config: config.clone(),
            schedule: Some(schedule.clone()),
            states,
        }),
    })
}

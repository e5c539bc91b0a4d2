//! Stroboscopic simulation of spin-1/2 chains kicked by disturbed pulse trains.
//!
//! A chain of `N` spins with Heisenberg or Ising nearest-neighbour couplings
//! sits in a static Zeeman field and receives one ultrashort kick per spin
//! per period. Kick strengths and delays come from a classical process on the
//! torus ([`bath`]). The chain is propagated period by period with the exact
//! monodromy operator ([`propagator`]) and read out through reduced density
//! matrices, entropies and Husimi maps ([`observables`]).

pub mod bath;
pub mod chain;
pub mod error;
pub mod experiments;
pub mod observables;
pub mod propagator;
pub mod reference;

pub use error::{Error, Result};

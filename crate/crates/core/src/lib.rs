//! Finite-volume operator algebra for observables at infinity.
//!
//! Sequences of observables on growing chains `{1, …, N}` are evaluated as
//! support-aware operator sums; their norms, commutators with local probes,
//! and expectations in product states are traced along a schedule of volumes
//! and classified by power-law fits. A commutative mirror on per-site torus
//! phase spaces carries the same checks for Poisson brackets.
//!
//! The crate is `no_std` (it needs `alloc`); IO and the command line live in
//! the companion `obsinf` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod classical;
pub mod error;
pub mod local;
pub mod matrix;
pub mod sequence;
pub mod shift;
pub mod state;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use local::{LocalOperator, NormMethod, NormOptions, NormOutcome, OperatorSum, StateVector, Volume};
pub use asymptotics::{Classification, DecayReport};
pub use classical::{ClassicalSequence, TrigObservable};
pub use matrix::{pauli, ComplexMatrix, Pauli};
pub use sequence::{ObservableSequence, TracePoint, VolumeSchedule};
pub use state::ProductState;

//! Two-spin isotropic Heisenberg working medium run through a quantum Otto
//! cycle.
//!
//! - [`spin_model`]: spectrum, Gibbs populations, density matrices, partial
//!   traces and local temperatures, plus a numerical Gibbs-state oracle.
//! - [`otto_cycle`]: heats, work and efficiencies of one cycle, regime
//!   classification and the inequality chain behind the efficiency bound.
//! - [`sweep`]: one-parameter sweeps, crossover coupling and CSV output.
//! - [`verify`]: seeded randomized checks of every invariant.
//! - [`cli`]: the `otto-spin` command line.

pub mod cli;
pub mod error;
pub mod otto_cycle;
pub mod spin_model;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use otto_cycle::{
    bound_audit, classify, efficiency_bound, run_cycle, sign_link, BoundAudit, CycleParams,
    CycleResult, FieldCase, RegimeReport,
};
pub use spin_model::{
    gibbs_state_oracle, local_temperature, reduced_state, spectrum, thermal_probs,
    LevelProbabilities, ModelPoint, SingleSpinState, Spectrum, TwoSpinState,
};
pub use sweep::{
    find_crossover, run_sweep, write_csv, Crossover, SweepRow, SweepSpec, SweepVariable,
};

//! Information rates of amplitude-shift-keyed molecular communication over
//! a one-dimensional drift-diffusion channel.
//!
//! The crate is organized bottom-up:
//!
//! - [`aig`]: first-passage law and per-slot arrival probabilities.
//! - [`channel`]: exact transition matrices with and without interference.
//! - [`capacity`]: Blahut-Arimoto, cost-constrained, per-unit-time, and
//!   per-unit-cost solvers for the memoryless channel.
//! - [`isi_bounds`]: lower and upper bounds under one slot of memory.
//! - [`detector`]: symbol-by-symbol MAP detection and its error probability.
//! - [`simulator`]: molecule-tracking Monte Carlo of the full link.
//! - [`cli`]: command-line front end emitting CSV series.

pub mod aig;
pub mod capacity;
pub mod channel;
pub mod cli;
pub mod detector;
pub mod error;
pub mod isi_bounds;
pub mod numeric;
pub mod report;
pub mod simulator;

pub use aig::{aig_cdf, slot_arrival_probs, ArrivalProbs, MediumParams, SlotConfig};
pub use capacity::{
    blahut_arimoto, capacity_at_multiplier, capacity_per_unit_time, constrained_blahut_arimoto, find_t_opt,
    jimbo_kunisawa, CapacityResult, CostModel, SolverOptions, TOptResult, TWindow,
};
pub use channel::{
    dmc_matrix, interference_pmf, lb1_matrix, lb2_matrix, ub_matrix, InputDistribution, InterferencePmf,
    MatrixKind, TransitionMatrix,
};
pub use error::{Error, Result};

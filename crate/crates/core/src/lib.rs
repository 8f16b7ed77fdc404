//! Pareto set learning with Stein variational hypernetworks.
//!
//! A preference-conditioned MLP maps rays on the probability simplex to
//! decision vectors. Training moves its parameters with a kernelised
//! (SVGD-style) update that combines a scalarisation-driven descent term with
//! a repulsive term between the objective-space images of a ray batch, with an
//! optional annealing schedule on the driving term.
//!
//! - [`nnet`]: the hypernetwork and preference rays
//! - [`problems`]: ZDT1, ZDT2, RE21 and RE37 with analytic Jacobians
//! - [`scalarize`]: LS, TCH and STCH scalarisations
//! - [`engine`]: kernel, schedules and the training loop
//! - [`metrics`]: MED, hypervolume, spacing and dominance filtering
//! - [`runner`]: experiment configs, checkpoints, result tables and front files

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod metrics;
pub mod nnet;
pub mod problems;
pub mod runner;
pub mod scalarize;

pub use error::{Error, Result};

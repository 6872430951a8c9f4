//! Top-k combinatorial bandits under full-bandit feedback.
//!
//! The crate is organised bottom-up:
//!
//! * [`bandit`]: problem instances, the summed-reward sampling oracle, gaps and
//!   pseudo-regret accounting.
//! * [`hadamard`]: Sylvester / Paley constructions and the row partitions that
//!   drive the group estimators.
//! * [`estimators`]: Hadamard group estimation (with and without pinned arms)
//!   plus the leave-one-out and random-sign baselines.
//! * [`csar`]: the successive accepts/rejects phase loop.
//! * [`linalg`], [`theory`]: small dense linear algebra and numeric checks on
//!   subset-sampling second-moment matrices.
//! * [`harness`]: experiment presets, CSV/SVG emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod csar;
pub mod error;
pub mod estimators;
pub mod hadamard;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};

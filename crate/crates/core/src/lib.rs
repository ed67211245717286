//! Dual-band RIS-assisted satellite QKD link simulation and phase optimization.
//!
//! An 850 nm quantum channel and an S-band RF channel share one reconfigurable
//! intelligent surface. Every element carries a quantized phase per band, and
//! the joint phase choice is posed as a binary optimization of
//! `F = α·QBER - β·log₂(1 + SNR)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod experiments;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod objective;
pub mod qubo;
pub mod ris;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};

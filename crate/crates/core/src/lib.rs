//! Tunnel-diode active RIS: circuit model, joint MIMO/RIS spectral-efficiency
//! optimizers, benchmark solvers and a seeded Monte Carlo harness.

pub mod benchmarks;
pub mod channel;
pub mod circuit;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod opt_ao;
pub mod opt_do;
pub mod reflection;
pub mod surface;

pub use error::{Error, Result};

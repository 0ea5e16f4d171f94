//! Closed-loop spectra, delay-robustness margins and time-domain simulation
//! of boundary-controlled transport and advection-diffusion loops.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod charfun;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod margin;
pub mod model;
pub mod poly;
pub mod roots;
pub mod scaled;
pub mod sim;

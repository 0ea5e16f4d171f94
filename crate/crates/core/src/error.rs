use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("viscous evaluation requires eta > 0 (got {0}); use the pure transport path")]
    Inviscid(f64),
    #[error("pole at s = {0}")]
    Pole(Complex64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("invalid search window: {0}")]
    InvalidWindow(String),
    #[error("zero suspected on boundary segment {from} -> {to}")]
    BoundaryZero { from: Complex64, to: Complex64 },
    #[error("non-finite residual at s = {0}")]
    NonFinite(Complex64),
    #[error("subdivision of cell {cell:?} does not conserve the winding count ({parent} vs {children})")]
    CountMismatch {
        cell: [f64; 4],
        parent: i64,
        children: i64,
    },
    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarginError {
    #[error("matrix dimension {0} outside supported range 2..=8")]
    Dimension(usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    Config(String),
    #[error("CFL number {0} exceeds 1")]
    Cfl(f64),
    #[error("state became non-finite at t = {time}")]
    Blowup { time: f64 },
    #[error("insufficient data for decay-rate fit: {0} envelope points")]
    InsufficientData(usize),
}

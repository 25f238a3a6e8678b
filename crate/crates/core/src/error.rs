use alloc::string::String;
use core::fmt;

use crate::lattice::Diagnostics;

/// Errors produced by the engines in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(Diagnostics),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("numerical error: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    #[error("event cap of {cap} exceeded ({detail})")]
    EventCap { cap: u64, detail: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn param(args: fmt::Arguments<'_>) -> Error {
    Error::Parameter(alloc::format!("{args}"))
}

pub(crate) fn capacity(args: fmt::Arguments<'_>) -> Error {
    Error::Capacity(alloc::format!("{args}"))
}

macro_rules! bail_param {
    ($($t:tt)*) => { return Err($crate::error::param(format_args!($($t)*))) };
}
macro_rules! bail_capacity {
    ($($t:tt)*) => { return Err($crate::error::capacity(format_args!($($t)*))) };
}
pub(crate) use {bail_capacity, bail_param};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("moment of order {r} is infinite for {dist}")]
    InfiniteMoment { dist: String, r: f64 },

    #[error("quadrature did not reach rel_tol {rel_tol:e} within {panels} panels (error estimate {error:e})")]
    NonConvergent {
        rel_tol: f64,
        panels: usize,
        error: f64,
    },

    #[error("law of {dist} is concentrated below the smallest positive double")]
    Underflow { dist: String },

    #[error("distribution is not subregular: {0}")]
    NotSubregular(String),

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("no finite D found up to {limit:e}")]
    NoFiniteD { limit: f64 },

    #[error("grid too coarse at x = {x}: supplied derivative deviates by {deviation:e}")]
    GridTooCoarse { x: f64, deviation: f64 },

    #[error("covariance matrix is not positive semidefinite (pivot {pivot} = {value:e})")]
    CovarianceNotPsd { pivot: usize, value: f64 },

    #[error("could not rescale set below target mass: {0}")]
    RescaleFailed(String),
}

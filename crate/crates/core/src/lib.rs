//! Hypercontractivity of minima and maxima of i.i.d. nonnegative random
//! variables, made computable.
//!
//! The crate has three layers:
//!
//! * an exact moment engine ([`distributions`], [`moments`]) that composes
//!   CDFs for iterated minima/maxima and integrates tails adaptively in log
//!   space, so `‖M_{n}m_{k}…(X)‖_r` is available for `n` up to `2^30`;
//! * checkers for the equivalent characterizations of min/max
//!   hypercontractivity and the comparison theorems built on them
//!   ([`hyper`], [`comparison`]);
//! * Monte Carlo verification of small-ball, correlation and Slepian-type
//!   inequalities for Gaussian and symmetric stable vectors
//!   ([`gauss_stable`]).
//!
//! Grid sweeps and Monte Carlo batches run on rayon when the `parallel`
//! feature is enabled (the default). Every reduction is performed in a fixed
//! order, so results are bit-identical for any thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod comparison;
pub mod distributions;
pub mod error;
pub mod gauss_stable;
pub mod hyper;
pub mod mc;
pub mod moments;
pub mod numeric;
pub mod par;
pub mod quad;

pub use distributions::{parse_spec, tail_power, DistributionSpec};
pub use error::{Error, Result};
pub use moments::{compose_cdf, moment_norm, MomentQuery, Op, Word};

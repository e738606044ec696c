// negated comparisons are how NaN is rejected alongside out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod density;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod hls;
pub mod particles;
pub mod phase;
pub mod potentials;
pub mod quadrature;
pub mod steady;

pub use error::{Error, Result};
pub use geometry::{Point, Space, Tangent};

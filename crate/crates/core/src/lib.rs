//! Adaptive dyadic partitions, partition entropies and coarse multifractal
//! estimators for monotone set functions on dyadic cubes.
//!
//! Everything numeric is generic over [`num::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the CLI uses.

pub mod dyadic;
pub mod error;
pub mod num;
pub mod partition;
pub mod rational;
pub mod setfn;
pub mod spectra;
pub mod table;

pub use dyadic::{CubeId, GridScheme, Partition, PartitionReport};
pub use error::{Error, Result};
pub use num::{Log2, Real};
pub use setfn::{Evaluator, SetFunctionSpec, Threshold};

pub type LogValue = num::Log2<f64>;
pub type Evaluator64 = setfn::Evaluator<f64>;
pub type Threshold64 = setfn::Threshold<f64>;

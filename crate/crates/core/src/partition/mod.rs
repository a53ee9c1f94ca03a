//! Adaptive partitions, the dual problem, Birman–Solomjak subdivision and
//! exhaustive oracles.

pub mod adaptive;
pub mod birman;
pub mod brute;
pub mod dual;
pub mod entropy;
pub mod io;

pub use adaptive::{adaptive_partition, count_good, GoodPartitionResult};
pub use birman::{birman_solomjak, bs_bound_check, bs_products, BsStep, BsTrajectory};
pub use brute::{
    brute_force_min_partition, brute_min_max, enumerate_partitions, MinMaxResult, OracleValue,
};
pub use dual::{
    alpha_exponents, dual_gamma, dual_sweep, dual_table, AlphaExponents, DualRow, DualSweepResult,
    SweepState,
};
pub use entropy::{dyadic_schedule, entropy_estimate, geometric_schedule, EntropyEstimate};
pub use io::{grid_from_name, CubeRecord, PartitionDoc};

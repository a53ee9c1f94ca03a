//! Partition functions, critical exponents and coarse multifractal estimates.
//!
//! Limits over `n` are replaced by window extrema over the tail half of the
//! requested levels; every such number is an estimate.

pub mod exponents;
pub mod multifractal;
pub mod report;
pub mod tau;

pub use exponents::{
    c_shifted, critical_exponents, kappa_diagnostic, minkowski_estimate, CShifted,
    CriticalExponents, KappaDiagnostic, MinkowskiEstimate,
};
pub use multifractal::{alpha_threshold, coarse_count, FEstimates, F_estimates, LevelCounts};
pub use report::{bounds_report, BoundsConfig, BoundsReport, Check, CheckStatus};
pub use tau::{q_zero, q_zero_from_dist, tau_from_dist, tau_n, tau_table};

//! Partition functions `τ_n(q) = (1/n) log2 Σ_{Q ∈ S_n} J(Q)^q` and their zeros.

use crate::dyadic::GridScheme;
use crate::error::{Error, Result};
use crate::num::{bisect_decreasing, Real};
use crate::setfn::level::LevelDist;
use crate::setfn::Evaluator;
use crate::table::{SpectrumTable, TableKind};

/// `τ_n(q)` from a level distribution; `-inf` when the level has no positive cube.
pub fn tau_from_dist<T: Real>(dist: &LevelDist<T>, level: u32, q: T) -> T {
    let s = dist.power_sum_log2(q);
    if s == T::neg_infinity() {
        s
    } else {
        s / T::lit(level as f64)
    }
}

fn check_level(level: u32) -> Result<()> {
    if level == 0 {
        return Err(Error::InvalidArgument("tau_n needs n >= 1".into()));
    }
    Ok(())
}

/// `τ_n(q)` for `q >= 0`, zero cubes dropped (`0^0 = 0`).
pub fn tau_n<T: Real>(eval: &Evaluator<T>, grid: &GridScheme, level: u32, q: T) -> Result<T> {
    check_level(level)?;
    if !(q >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "tau_n needs q >= 0, got {q}"
        )));
    }
    Ok(tau_from_dist(&eval.level_dist(grid, level)?, level, q))
}

/// One column `tau_<n>` per level over the abscissa `q`.
pub fn tau_table<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    levels: &[u32],
    q_grid: &[T],
) -> Result<SpectrumTable> {
    if let Some(q) = q_grid.iter().find(|q| !(**q >= T::zero())) {
        return Err(Error::InvalidArgument(format!(
            "tau_n needs q >= 0, got {q}"
        )));
    }
    let mut table = SpectrumTable::new(
        TableKind::Tau,
        "q",
        q_grid.iter().map(|q| to_f64(*q)).collect(),
    );
    table.validate()?;
    for &n in levels {
        check_level(n)?;
        let dist = eval.level_dist(grid, n)?;
        table.push_column(
            format!("tau_{n}"),
            q_grid
                .iter()
                .map(|&q| to_f64(tau_from_dist(&dist, n, q)))
                .collect(),
        );
    }
    table.meta.insert("grid".into(), grid.name().into());
    Ok(table)
}

/// Zero of `τ_n` from a level distribution.
pub fn q_zero_from_dist<T: Real>(dist: &LevelDist<T>, level: u32, tol: T) -> Result<T> {
    check_level(level)?;
    let max = dist.max_log2();
    if max == T::neg_infinity() || max >= T::zero() {
        return Err(Error::NonBracketing { level });
    }
    let tau = |q: T| tau_from_dist(dist, level, q);
    let t0 = tau(T::zero());
    if t0 <= T::zero() {
        // A single positive cube: τ_n(0) = 0 is already the zero.
        return Ok(T::zero());
    }
    let mut hi = T::one();
    while tau(hi) >= T::zero() {
        hi = hi + hi;
        if !hi.is_finite() {
            return Err(Error::NonBracketing { level });
        }
    }
    Ok(bisect_decreasing(T::zero(), hi, tol, tau))
}

/// `q_n`, the unique zero of `τ_n`; needs every level value below 1.
pub fn q_zero<T: Real>(eval: &Evaluator<T>, grid: &GridScheme, level: u32, tol: T) -> Result<T> {
    check_level(level)?;
    q_zero_from_dist(&eval.level_dist(grid, level)?, level, tol)
}

pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

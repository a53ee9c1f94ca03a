//! Critical exponents, `dim_∞`, Minkowski estimates and the shifted function `c(q)`.

use std::ops::Range;

use num_bigint::BigUint;

use crate::dyadic::GridScheme;
use crate::error::{Error, Result};
use crate::num::{extrema, least_squares, log2_biguint, tail_window, LinearFit, LogSumAcc, Real};
use crate::setfn::Evaluator;
use crate::table::{SpectrumTable, TableKind};

use super::multifractal::{FEstimates, F_estimates};
use super::tau::{q_zero_from_dist, tau_from_dist, to_f64};

/// Default tolerance on `|τ_n(q_n)|`.
pub const Q_TOL: f64 = 1e-12;
/// Offset from `𝔮_est` at which the partial sums are probed.
pub const KAPPA_DELTA: f64 = 0.1;
/// Inner grid spacing for the one-sided slopes of `c` at 0.
pub const C_STEP: f64 = 1.0 / 64.0;

fn check_levels(levels: &[u32]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("level range is empty".into()));
    }
    if levels[0] == 0 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "levels must be positive and increasing".into(),
        ));
    }
    Ok(())
}

/// Trend of `Σ_{n<=N} Σ_Q J(Q)^q` on either side of `𝔮_est`.
#[derive(Clone, Debug)]
pub struct KappaDiagnostic<T> {
    pub delta: T,
    pub q_below: T,
    pub q_above: T,
    /// `log2` partial sums at each requested `N`.
    pub log2_partial_below: Vec<T>,
    pub log2_partial_above: Vec<T>,
    /// Growth per level of the partial sums over the window.
    pub slope_below: T,
    pub slope_above: T,
    /// The sums grow below `𝔮_est` and level off above it.
    pub consistent: bool,
}

pub fn kappa_diagnostic<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    levels: &[u32],
    q: T,
    delta: T,
) -> Result<KappaDiagnostic<T>> {
    check_levels(levels)?;
    let (q_below, q_above) = ((q - delta).max(T::zero()), q + delta);
    let mut below = LogSumAcc::new();
    let mut above = LogSumAcc::new();
    let mut log2_partial_below = Vec::with_capacity(levels.len());
    let mut log2_partial_above = Vec::with_capacity(levels.len());
    let mut next = 0;
    for n in 1..=*levels.last().expect("nonempty") {
        let dist = eval.level_dist(grid, n)?;
        below.add(dist.power_sum_log2(q_below));
        above.add(dist.power_sum_log2(q_above));
        if levels[next] == n {
            log2_partial_below.push(below.value());
            log2_partial_above.push(above.value());
            next += 1;
        }
    }
    let window = tail_window(levels.len());
    let xs: Vec<T> = levels[window.clone()]
        .iter()
        .map(|&n| T::lit(n as f64))
        .collect();
    let slope = |ys: &[T]| least_squares(&xs, &ys[window.clone()]).map_or(T::zero(), |f| f.slope);
    let slope_below = slope(&log2_partial_below);
    let slope_above = slope(&log2_partial_above);
    Ok(KappaDiagnostic {
        delta,
        q_below,
        q_above,
        consistent: slope_below > T::zero() && slope_above < slope_below / T::lit(2.0),
        log2_partial_below,
        log2_partial_above,
        slope_below,
        slope_above,
    })
}

/// Box-counting estimate from the positive cubes of each level.
#[derive(Clone, Debug)]
pub struct MinkowskiEstimate<T> {
    pub levels: Vec<u32>,
    pub counts: Vec<BigUint>,
    /// `τ_n(0) = log2 N_n / n`.
    pub tau0: Vec<T>,
    pub window: Range<usize>,
    /// Window maximum of `τ_n(0)`.
    pub upper: T,
    pub lower: T,
    /// Least squares of `log2 N_n` on `n` over the window.
    pub fit: Option<LinearFit<T>>,
}

impl<T: Real> MinkowskiEstimate<T> {
    /// The regression slope, falling back to the window maximum.
    pub fn estimate(&self) -> T {
        self.fit.map_or(self.upper, |f| f.slope)
    }
}

pub fn minkowski_estimate<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    levels: &[u32],
) -> Result<MinkowskiEstimate<T>> {
    check_levels(levels)?;
    let counts = levels
        .iter()
        .map(|&n| eval.positive_count(grid, n))
        .collect::<Result<Vec<_>>>()?;
    let log2: Vec<T> = counts.iter().map(|c| T::lit(log2_biguint(c))).collect();
    let tau0: Vec<T> = log2
        .iter()
        .zip(levels)
        .map(|(&l, &n)| l / T::lit(n as f64))
        .collect();
    let window = tail_window(levels.len());
    let (upper, lower) = extrema(&tau0[window.clone()]).expect("nonempty window");
    let xs: Vec<T> = levels[window.clone()]
        .iter()
        .map(|&n| T::lit(n as f64))
        .collect();
    let fit = least_squares(&xs, &log2[window.clone()]);
    Ok(MinkowskiEstimate {
        levels: levels.to_vec(),
        counts,
        tau0,
        window,
        upper,
        lower,
        fit,
    })
}

#[derive(Clone, Debug)]
pub struct CriticalExponents<T> {
    pub levels: Vec<u32>,
    pub window: Range<usize>,
    pub q_n: Vec<T>,
    /// `𝔮_est`, window maximum of `q_n`.
    pub q_upper: T,
    /// `q̲_est`, window minimum of `q_n`.
    pub q_lower: T,
    /// `-log2 sup_{S_n} J / n` per level.
    pub dim_inf_n: Vec<T>,
    /// `dim_∞` estimate, window minimum of `dim_inf_n`.
    pub dim_inf: T,
    pub tau0_n: Vec<T>,
    pub tau1_n: Vec<T>,
    /// Window maxima of `τ_n(0)` and `τ_n(1)`.
    pub tau0: T,
    pub tau1: T,
    /// Upper Minkowski estimate on the classical grid.
    pub minkowski: MinkowskiEstimate<T>,
    pub kappa: Option<KappaDiagnostic<T>>,
    pub f: FEstimates<T>,
    pub warnings: Vec<String>,
}

impl<T: Real> CriticalExponents<T> {
    /// Abscissa `n`, per-level inputs of every estimate.
    pub fn levels_table(&self) -> SpectrumTable {
        let mut t = SpectrumTable::new(
            TableKind::Levels,
            "n",
            self.levels.iter().map(|&n| n as f64).collect(),
        );
        let col = |v: &[T]| v.iter().map(|&x| to_f64(x)).collect::<Vec<_>>();
        t.push_column("q_n", col(&self.q_n));
        t.push_column("tau_n_0", col(&self.tau0_n));
        t.push_column("tau_n_1", col(&self.tau1_n));
        t.push_column("dim_inf_n", col(&self.dim_inf_n));
        t.push_column("minkowski_tau_n_0", col(&self.minkowski.tau0));
        for (k, v) in [
            ("q_upper", self.q_upper),
            ("q_lower", self.q_lower),
            ("dim_inf", self.dim_inf),
            ("tau_0", self.tau0),
            ("tau_1", self.tau1),
            ("minkowski_upper", self.minkowski.upper),
            ("minkowski_slope", self.minkowski.estimate()),
            ("F_upper", self.f.upper),
            ("F_lower", self.f.lower),
        ] {
            t.summary.insert(k.into(), to_f64(v));
        }
        t.meta.insert(
            "window".into(),
            format!("{}..{}", self.window.start, self.window.end),
        );
        t
    }
}

pub fn critical_exponents<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    levels: &[u32],
    alpha_grid: &[T],
) -> Result<CriticalExponents<T>> {
    check_levels(levels)?;
    let tol = T::lit(Q_TOL).max(T::epsilon() * T::lit(16.0));
    let mut q_n = Vec::with_capacity(levels.len());
    let mut dim_inf_n = Vec::with_capacity(levels.len());
    let mut tau0_n = Vec::with_capacity(levels.len());
    let mut tau1_n = Vec::with_capacity(levels.len());
    let mut warnings = Vec::new();
    for &n in levels {
        let dist = eval.level_dist(grid, n)?;
        q_n.push(q_zero_from_dist(&dist, n, tol)?);
        tau0_n.push(tau_from_dist(&dist, n, T::zero()));
        tau1_n.push(tau_from_dist(&dist, n, T::one()));
        dim_inf_n.push(-eval.sup_level_log2(grid, n)?.log2() / T::lit(n as f64));
        warnings.extend(eval.sup_depth_warning(n));
    }
    let window = tail_window(levels.len());
    let (q_upper, q_lower) = extrema(&q_n[window.clone()]).expect("nonempty window");
    let (_, dim_inf) = extrema(&dim_inf_n[window.clone()]).expect("nonempty window");
    let (tau0, _) = extrema(&tau0_n[window.clone()]).expect("nonempty window");
    let (tau1, _) = extrema(&tau1_n[window.clone()]).expect("nonempty window");
    let minkowski = minkowski_estimate(eval, &GridScheme::classical(eval.dim()), levels)?;
    let kappa = if q_upper.is_finite() {
        Some(kappa_diagnostic(
            eval,
            grid,
            levels,
            q_upper,
            T::lit(KAPPA_DELTA),
        )?)
    } else {
        None
    };
    let f = F_estimates(eval, grid, levels, alpha_grid)?;
    Ok(CriticalExponents {
        levels: levels.to_vec(),
        window,
        q_n,
        q_upper,
        q_lower,
        dim_inf_n,
        dim_inf,
        tau0_n,
        tau1_n,
        tau0,
        tau1,
        minkowski,
        kappa,
        f,
        warnings,
    })
}

/// `c(q) = limsup_n τ_n(q + q_n)` on a grid, with the subdifferential at 0.
#[derive(Clone, Debug)]
pub struct CShifted<T> {
    pub levels: Vec<u32>,
    pub q_n: Vec<T>,
    pub q_grid: Vec<T>,
    /// Window maximum over `n` of `τ_n(q + q_n)`.
    pub c: Vec<T>,
    /// `τ_n(q + q_n)`, one row per level.
    pub shifted: Vec<Vec<T>>,
    /// Left and right secant slopes of `c` at 0 with spacing `h`.
    pub a: T,
    pub b: T,
    pub h: T,
    pub q_lower: T,
    pub f_lower: T,
    /// `((b/a) q̲, q̲)`, which should contain `F̲`.
    pub bracket: (T, T),
}

impl<T: Real> CShifted<T> {
    pub fn table(&self) -> SpectrumTable {
        let mut t = SpectrumTable::new(
            TableKind::CShifted,
            "q",
            self.q_grid.iter().map(|&q| to_f64(q)).collect(),
        );
        t.push_column("c", self.c.iter().map(|&v| to_f64(v)).collect());
        for (n, row) in self.levels.iter().zip(&self.shifted) {
            t.push_column(
                format!("tau_{n}_shifted"),
                row.iter().map(|&v| to_f64(v)).collect(),
            );
        }
        for (k, v) in [
            ("a", self.a),
            ("b", self.b),
            ("q_lower", self.q_lower),
            ("F_lower", self.f_lower),
            ("bracket_lo", self.bracket.0),
            ("bracket_hi", self.bracket.1),
        ] {
            t.summary.insert(k.into(), to_f64(v));
        }
        t
    }
}

pub fn c_shifted<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    levels: &[u32],
    q_grid: &[T],
) -> Result<CShifted<T>> {
    check_levels(levels)?;
    if q_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("q grid must be increasing".into()));
    }
    let tol = T::lit(Q_TOL).max(T::epsilon() * T::lit(16.0));
    let h = T::lit(C_STEP);
    let probes = [-h, T::zero(), h];
    let mut q_n = Vec::with_capacity(levels.len());
    let mut shifted = Vec::with_capacity(levels.len());
    let mut probe_rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let dist = eval.level_dist(grid, n)?;
        let qn = q_zero_from_dist(&dist, n, tol)?;
        q_n.push(qn);
        shifted.push(
            q_grid
                .iter()
                .map(|&q| tau_from_dist(&dist, n, q + qn))
                .collect::<Vec<T>>(),
        );
        probe_rows.push(
            probes
                .iter()
                .map(|&q| tau_from_dist(&dist, n, q + qn))
                .collect::<Vec<T>>(),
        );
    }
    let window = tail_window(levels.len());
    let wmax = |rows: &[Vec<T>], j: usize| {
        rows[window.clone()]
            .iter()
            .map(|r| r[j])
            .fold(T::neg_infinity(), T::max)
    };
    let c = (0..q_grid.len()).map(|j| wmax(&shifted, j)).collect();
    let (cm, c0, cp) = (
        wmax(&probe_rows, 0),
        wmax(&probe_rows, 1),
        wmax(&probe_rows, 2),
    );
    let a = (c0 - cm) / h;
    let b = (cp - c0) / h;
    let (_, q_lower) = extrema(&q_n[window.clone()]).expect("nonempty window");
    let f_lower = F_estimates(eval, grid, levels, &[])?.lower;
    Ok(CShifted {
        levels: levels.to_vec(),
        q_n,
        q_grid: q_grid.to_vec(),
        c,
        shifted,
        a,
        b,
        h,
        q_lower,
        f_lower,
        bracket: ((b / a) * q_lower, q_lower),
    })
}

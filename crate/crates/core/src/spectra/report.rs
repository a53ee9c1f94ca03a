//! Consolidated check of the inequality chains between the estimators.

use std::fmt::Write as _;

use num_traits::{One, Signed};
use serde::Serialize;

use crate::dyadic::GridScheme;
use crate::error::{Error, Result};
use crate::partition::{dual_table, entropy_estimate, geometric_schedule, EntropyEstimate};
use crate::rational::rational_to_real;
use crate::setfn::{Evaluator, SetFunctionSpec};

use super::exponents::{critical_exponents, CriticalExponents};
use super::tau::{tau_from_dist, to_f64};

/// Default tolerance of every check.
pub const DEFAULT_TOL: f64 = 0.05;
/// Upper end of the default `x` schedule, as `log2 x`.
const MAX_X_LOG2: f64 = 200.0;
/// Keeps `M(x)` enumerable on grids without grouped counting.
const MAX_WALK_LOG2: f64 = 20.0;

#[derive(Clone, Debug)]
pub struct BoundsConfig {
    pub levels: Vec<u32>,
    pub tol: f64,
    /// `log2 x` of the entropy schedule; derived from the levels when absent.
    pub x_log2: Option<Vec<f64>>,
    /// Budgets of the dual problem; powers of two up to `2^14` when absent.
    pub budgets: Option<Vec<u64>>,
    /// Levels `n_k` for the liminf bound; the window levels when absent.
    pub witness_levels: Option<Vec<u32>>,
    pub alpha_grid: Vec<f64>,
}

impl BoundsConfig {
    pub fn new(levels: Vec<u32>) -> Self {
        BoundsConfig {
            levels,
            tol: DEFAULT_TOL,
            x_log2: None,
            budgets: None,
            witness_levels: None,
            alpha_grid: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "reason")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The hypothesis of the statement does not hold for this spec.
    NotApplicable(String),
    /// An input estimate could not be computed.
    Unavailable(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub group: String,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `<=`, `=` or `<`.
    pub relation: String,
    #[serde(flatten)]
    pub status: CheckStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub tol: f64,
    pub grid: String,
    pub levels: Vec<u32>,
    /// Named estimates that enter the checks.
    pub estimates: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl BoundsReport {
    /// No check failed or was left unavailable.
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| matches!(c.status, CheckStatus::Pass | CheckStatus::NotApplicable(_)))
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.estimates
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "grid {} levels {}..={} tol {}",
            self.grid,
            self.levels[0],
            self.levels[self.levels.len() - 1],
            self.tol
        );
        for (k, v) in &self.estimates {
            let _ = writeln!(s, "  {k:<16} {v:.6}");
        }
        let mut group = "";
        for c in &self.checks {
            if c.group != group {
                group = &c.group;
                let _ = writeln!(s, "[{group}]");
            }
            let verdict = match &c.status {
                CheckStatus::Pass => "PASS".to_string(),
                CheckStatus::Fail => "FAIL".to_string(),
                CheckStatus::NotApplicable(r) => format!("N/A ({r})"),
                CheckStatus::Unavailable(r) => format!("UNAVAILABLE ({r})"),
            };
            let _ = writeln!(
                s,
                "  {:<48} {:.6} {} {:.6}  {verdict}",
                c.name, c.lhs, c.relation, c.rhs
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(
            s,
            "verdict: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        s
    }
}

struct Builder {
    tol: f64,
    group: String,
    checks: Vec<Check>,
}

impl Builder {
    fn push(&mut self, name: &str, lhs: f64, relation: &str, rhs: f64, ok: bool) {
        let status = if !lhs.is_finite() && !rhs.is_finite() && lhs.is_nan() {
            CheckStatus::Unavailable("not finite".into())
        } else if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self.checks.push(Check {
            group: self.group.clone(),
            name: name.into(),
            lhs,
            rhs,
            relation: relation.into(),
            status,
        });
    }

    fn le(&mut self, name: &str, lhs: f64, rhs: f64) {
        let ok = lhs <= rhs + self.tol;
        self.push(name, lhs, "<=", rhs, ok);
    }

    fn eq(&mut self, name: &str, lhs: f64, rhs: f64) {
        let ok = (lhs - rhs).abs() <= self.tol;
        self.push(name, lhs, "=", rhs, ok);
    }

    fn skip(&mut self, name: &str, relation: &str, status: CheckStatus) {
        self.checks.push(Check {
            group: self.group.clone(),
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            relation: relation.into(),
            status,
        });
    }
}

fn default_x_schedule(ce: &CriticalExponents<f64>, grid: &GridScheme) -> Vec<f64> {
    let n_max = *ce.levels.last().expect("nonempty") as f64;
    let mut hi = (n_max * ce.dim_inf).min(MAX_X_LOG2);
    if !grid.is_classical() && ce.q_upper > 0.0 {
        hi = hi.min(MAX_WALK_LOG2 / ce.q_upper);
    }
    let hi = hi.floor().max(6.0) as i64;
    let lo = (hi / 2).max(3);
    let step = ((hi - lo) / 24).max(1);
    // Half-integer exponents keep `x` away from the dyadic values of the
    // cube volumes, where strict and weak inequalities differ.
    (lo..hi)
        .step_by(step as usize)
        .map(|k| k as f64 + 0.5)
        .collect()
}

fn default_budgets() -> Vec<u64> {
    (2..=14).map(|k| 1u64 << k).collect()
}

/// Runs every estimator on `levels` and checks the chains
/// `F̲ ≤ h̲ ≤ h̄ = 𝔮 = κ = F̄`, `-1/F̲ ≤ α̲ ≤ ᾱ = -1/𝔮`, the fractal-geometric
/// bounds on `𝔮`, the bound for `J Λ^a`, and the liminf bound for `h̲`.
pub fn bounds_report(
    eval: &Evaluator<f64>,
    grid: &GridScheme,
    config: &BoundsConfig,
) -> Result<BoundsReport> {
    if !(config.tol >= 0.0) {
        return Err(Error::InvalidArgument(
            "tolerance must be nonnegative".into(),
        ));
    }
    let ce = critical_exponents(eval, grid, &config.levels, &config.alpha_grid)?;
    let tol = config.tol;
    let d = eval.dim() as f64;
    let q = ce.q_upper;
    let mut warnings = ce.warnings.clone();
    let mut b = Builder {
        tol,
        group: String::new(),
        checks: Vec::new(),
    };

    let x_log2 = config
        .x_log2
        .clone()
        .unwrap_or_else(|| default_x_schedule(&ce, grid));
    let entropy: std::result::Result<EntropyEstimate<f64>, String> =
        entropy_estimate(eval, grid, &geometric_schedule(&x_log2)).map_err(|e| e.to_string());
    let budgets = config.budgets.clone().unwrap_or_else(default_budgets);
    let dual = dual_table(eval, grid, &budgets)
        .map_err(|e| e.to_string())
        .and_then(|r| {
            r.alpha
                .ok_or_else(|| "fewer than 3 usable budgets".to_string())
        });

    let mut estimates = vec![
        ("q_crit".to_string(), q),
        ("q_lower".to_string(), ce.q_lower),
        ("dim_inf".to_string(), ce.dim_inf),
        ("tau_0".to_string(), ce.tau0),
        ("tau_1".to_string(), ce.tau1),
        ("minkowski".to_string(), ce.minkowski.upper),
        ("F_upper".to_string(), ce.f.upper),
        ("F_lower".to_string(), ce.f.lower),
    ];
    if let Some(k) = &ce.kappa {
        estimates.push(("kappa_slope_below".into(), k.slope_below));
        estimates.push(("kappa_slope_above".into(), k.slope_above));
    }
    if let Ok(h) = &entropy {
        estimates.push(("h_upper".into(), h.upper));
        estimates.push(("h_lower".into(), h.lower));
        if let Some(s) = h.slope() {
            estimates.push(("h_slope".into(), s));
        }
    }
    if let Ok(a) = &dual {
        estimates.push(("alpha_upper".into(), a.upper));
        estimates.push(("alpha_lower".into(), a.lower));
        if let Some(f) = a.fit {
            estimates.push(("alpha_slope".into(), f.slope));
        }
    }

    b.group = "precondition".into();
    b.push("dim_inf > 0", 0.0, "<", ce.dim_inf, ce.dim_inf > 0.0);
    let positive = ce.dim_inf > 0.0;
    let na = |why: &str| CheckStatus::NotApplicable(why.into());

    b.group = "partition entropy chain".into();
    if !positive {
        for (n, r) in [
            ("F_lower <= h_lower", "<="),
            ("h_lower <= h_upper", "<="),
            ("h_upper = q_crit", "="),
            ("q_crit = kappa", "="),
            ("F_upper = q_crit", "="),
        ] {
            b.skip(n, r, na("dim_inf is not positive"));
        }
    } else {
        match &entropy {
            Ok(h) => {
                b.le("F_lower <= h_lower", ce.f.lower, h.lower);
                b.le("h_lower <= h_upper", h.lower, h.upper);
                b.eq("h_upper = q_crit", h.upper, q);
            }
            Err(e) => {
                for (n, r) in [
                    ("F_lower <= h_lower", "<="),
                    ("h_lower <= h_upper", "<="),
                    ("h_upper = q_crit", "="),
                ] {
                    b.skip(n, r, CheckStatus::Unavailable(e.clone()));
                }
            }
        }
        match &ce.kappa {
            Some(k) => b.push(
                "q_crit = kappa",
                k.slope_above,
                "<",
                k.slope_below,
                k.consistent,
            ),
            None => b.skip(
                "q_crit = kappa",
                "=",
                CheckStatus::Unavailable("q_crit is not finite".into()),
            ),
        }
        b.eq("F_upper = q_crit", ce.f.upper, q);
        b.le("F_lower <= q_lower", ce.f.lower, ce.q_lower);
        b.le("q_lower <= q_crit", ce.q_lower, q);
    }

    b.group = "dual exponent chain".into();
    if !positive {
        for (n, r) in [
            ("alpha_upper = -1/q_crit", "="),
            ("alpha_lower <= alpha_upper", "<="),
            ("-1/F_lower <= alpha_lower", "<="),
        ] {
            b.skip(n, r, na("dim_inf is not positive"));
        }
    } else {
        match &dual {
            Ok(a) => {
                match a.fit {
                    Some(f) => b.eq("alpha_upper = -1/q_crit", f.slope, -1.0 / q),
                    None => b.skip(
                        "alpha_upper = -1/q_crit",
                        "=",
                        CheckStatus::Unavailable("no regression".into()),
                    ),
                }
                b.le("alpha_lower <= alpha_upper", a.lower, a.upper);
                b.le("-1/F_lower <= alpha_lower", -1.0 / ce.f.lower, a.lower);
            }
            Err(e) => {
                for (n, r) in [
                    ("alpha_upper = -1/q_crit", "="),
                    ("alpha_lower <= alpha_upper", "<="),
                    ("-1/F_lower <= alpha_lower", "<="),
                ] {
                    b.skip(n, r, CheckStatus::Unavailable(e.clone()));
                }
            }
        }
    }

    let (t0, t1, dinf, dm) = (ce.tau0, ce.tau1, ce.dim_inf, ce.minkowski.upper);
    b.group = "fractal-geometric bounds, q_crit >= 1".into();
    let names_ge = [
        "tau(0)/(tau(0)-tau(1)) <= q_crit",
        "q_crit <= (dim_inf+tau(1))/dim_inf",
        "(dim_inf+tau(1))/dim_inf <= tau(0)/dim_inf",
        "tau(0)/dim_inf <= dim_M/dim_inf",
        "dim_M/dim_inf <= d/dim_inf",
    ];
    if positive && q >= 1.0 - tol && q.is_finite() {
        b.le(names_ge[0], t0 / (t0 - t1), q);
        b.le(names_ge[1], q, (dinf + t1) / dinf);
        b.le(names_ge[2], (dinf + t1) / dinf, t0 / dinf);
        b.le(names_ge[3], t0 / dinf, dm / dinf);
        b.le(names_ge[4], dm / dinf, d / dinf);
    } else {
        for n in names_ge {
            b.skip(n, "<=", na("needs 1 <= q_crit < inf"));
        }
    }
    b.group = "fractal-geometric bounds, q_crit <= 1".into();
    let names_le = [
        "(dim_inf+tau(1))/dim_inf <= q_crit",
        "q_crit <= tau(0)/(tau(0)-tau(1))",
        "tau(0)/(tau(0)-tau(1)) <= dim_M/(dim_M-tau(1))",
    ];
    if positive && q <= 1.0 + tol {
        b.le(names_le[0], (dinf + t1) / dinf, q);
        b.le(names_le[1], q, t0 / (t0 - t1));
        b.le(names_le[2], t0 / (t0 - t1), dm / (dm - t1));
    } else {
        for n in names_le {
            b.skip(n, "<=", na("needs q_crit <= 1"));
        }
    }

    b.group = "weighted bound".into();
    let name = "q_crit <= tau_J(0)/(tau_J(0)+a d)";
    match eval.spec() {
        SetFunctionSpec::LambdaWeight {
            inner, a, b: bexp, ..
        } if a.is_positive() && bexp.is_one() => {
            let a: f64 = rational_to_real(a);
            let inner_tau0 = Evaluator::<f64>::new(inner).and_then(|ie| {
                let w = &ce.levels[ce.window.clone()];
                w.iter()
                    .map(|&n| Ok(tau_from_dist(&ie.level_dist(grid, n)?, n, 0.0)))
                    .collect::<Result<Vec<f64>>>()
                    .map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max))
            });
            match inner_tau0 {
                Ok(tj) => {
                    estimates.push(("inner_tau_0".into(), tj));
                    b.le(name, q, tj / (tj + a * d));
                }
                Err(e) => b.skip(name, "<=", CheckStatus::Unavailable(e.to_string())),
            }
        }
        _ => b.skip(name, "<=", na("not a lambda weight with a > 0 and b = 1")),
    }

    b.group = "liminf bound".into();
    let name = "h_lower <= min_k log card S_nk / log x_k";
    match (&entropy, positive) {
        (Ok(h), true) => {
            let witnesses = config
                .witness_levels
                .clone()
                .unwrap_or_else(|| ce.levels[ce.window.clone()].to_vec());
            let mut bound = f64::INFINITY;
            let mut failed = None;
            for &n in &witnesses {
                let sup = match eval.sup_level_log2(grid, n) {
                    Ok(s) => s.log2(),
                    Err(e) => {
                        failed = Some(e.to_string());
                        break;
                    }
                };
                let card = if grid.is_classical() {
                    n as f64 * d
                } else {
                    match grid.level_members(n, eval.limits.enumeration_bits) {
                        Ok(it) => (it.count() as f64).log2(),
                        Err(e) => {
                            failed = Some(e.to_string());
                            break;
                        }
                    }
                };
                if sup < 0.0 {
                    bound = bound.min(card / -sup);
                }
            }
            match failed {
                Some(e) => b.skip(name, "<=", CheckStatus::Unavailable(e)),
                None => b.le(name, h.lower, bound),
            }
        }
        (Err(e), true) => b.skip(name, "<=", CheckStatus::Unavailable(e.clone())),
        (_, false) => b.skip(name, "<=", na("dim_inf is not positive")),
    }

    if ce.f.candidates > 0 && ce.f.lower == 0.0 {
        warnings.push("F_lower is 0 on the window; the level range may be too short".into());
    }
    Ok(BoundsReport {
        tol,
        grid: grid.name().into(),
        levels: config.levels.clone(),
        estimates: estimates.into_iter().map(|(k, v)| (k, to_f64(v))).collect(),
        checks: b.checks,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(spec: SetFunctionSpec, levels: std::ops::RangeInclusive<u32>) -> BoundsReport {
        let e = Evaluator::<f64>::new(&spec).unwrap();
        let g = GridScheme::classical(e.dim());
        bounds_report(&e, &g, &BoundsConfig::new(levels.collect())).unwrap()
    }

    #[test]
    fn lebesgue_all_pass() {
        let r = run(SetFunctionSpec::lebesgue(1), 1..=40);
        assert!(r.passed(), "{}", r.to_text());
        assert!((r.estimate("q_crit").unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_of_binomial() {
        let r = run(
            SetFunctionSpec::dyadic(1, &["0.3", "0.7"]).power("3"),
            1..=120,
        );
        assert!(r.passed(), "{}", r.to_text());
        assert!((r.estimate("q_crit").unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert!(matches!(
            r.check("q_crit <= tau_J(0)/(tau_J(0)+a d)").unwrap().status,
            CheckStatus::NotApplicable(_)
        ));
        let text = r.to_json();
        assert!(text.contains("\"status\": \"pass\""));
    }
}

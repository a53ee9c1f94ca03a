//! Birman–Solomjak subdivision for `J_a(Q) = J(Q) Λ(Q)^a`, `a > 0`.

use num_rational::BigRational;
use num_traits::Signed;

use crate::dyadic::Partition;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::rational::rational_to_real;
use crate::setfn::{Evaluator, SetFunctionSpec, Threshold};

#[derive(Clone, Debug, PartialEq)]
pub struct BsStep<T> {
    pub step: usize,
    /// `N_k`, the cardinality of `P_k`.
    pub card: usize,
    /// `log2 η_a(P_k)`, the largest `J_a` value in `P_k`.
    pub eta_log2: T,
}

#[derive(Clone, Debug)]
pub struct BsTrajectory<T> {
    pub steps: Vec<BsStep<T>>,
    pub a: BigRational,
    pub dim: usize,
    /// `η_a(P_k)` never increased.
    pub eta_nonincreasing: bool,
    pub final_partition: Partition,
}

/// Runs `steps` elementary extensions from `initial`. At step `k` every cube
/// with `J_a(Q) >= 2^{-da} η_a(P_{k-1})` is split into its `2^d` children.
pub fn birman_solomjak<T: Real>(
    spec: &SetFunctionSpec,
    a: &BigRational,
    initial: &Partition,
    steps: usize,
) -> Result<BsTrajectory<T>> {
    if !a.is_positive() {
        return Err(Error::InvalidArgument(
            "the exponent a must be positive".into(),
        ));
    }
    if !initial.grid.is_classical() {
        return Err(Error::InvalidArgument(
            "subdivision runs on the classical grid".into(),
        ));
    }
    if !initial.validate().is_partition_of_unit_cube() {
        return Err(Error::InvalidPartition(
            "initial partition does not tile the unit cube".into(),
        ));
    }
    let weighted = SetFunctionSpec::LambdaWeight {
        inner: Box::new(spec.clone()),
        a: a.clone(),
        b: BigRational::from_integer(1.into()),
        sup_depth: 0,
    };
    let eval: Evaluator<T> = Evaluator::new(&weighted)?;
    let dim = eval.dim();
    let da = a * BigRational::from_integer(dim.into());
    let da_t: T = rational_to_real(&da);
    let scale = if da.is_integer() {
        da.to_integer()
            .try_into()
            .ok()
            .map(|k: i64| crate::num::pow2_rational(-k))
    } else {
        None
    };

    let mut cubes: Vec<(crate::dyadic::CubeId, T)> = initial
        .cubes
        .iter()
        .map(|q| Ok((q.clone(), eval.value_log2(q)?.log2())))
        .collect::<Result<_>>()?;
    let argmax = |cubes: &[(crate::dyadic::CubeId, T)]| {
        cubes
            .iter()
            .enumerate()
            .max_by(|x, y| eval.cmp_values((&x.1 .0, x.1 .1), (&y.1 .0, y.1 .1)))
            .map(|(i, _)| i)
    };
    let mut out = Vec::with_capacity(steps + 1);
    let mut best = argmax(&cubes);
    let eta = |i: Option<usize>, cubes: &[(crate::dyadic::CubeId, T)]| {
        i.map_or(T::neg_infinity(), |i| cubes[i].1)
    };
    out.push(BsStep {
        step: 0,
        card: cubes.len(),
        eta_log2: eta(best, &cubes),
    });
    let mut monotone = true;
    for k in 1..=steps {
        let Some(bi) = best else { break };
        let (ref qmax, eta_prev) = cubes[bi];
        let t = Threshold {
            log2: eta_prev - da_t,
            exact: match &scale {
                Some(s) => eval.value_exact(qmax).ok().map(|v| v * s),
                None => None,
            },
        };
        let mut next = Vec::with_capacity(cubes.len());
        for (q, v) in cubes {
            if eval.meets(&q, v, &t) {
                for ch in q.children() {
                    let w = eval.value_log2(&ch)?.log2();
                    next.push((ch, w));
                }
            } else {
                next.push((q, v));
            }
        }
        if next.len() > eval.limits.max_cubes {
            return Err(Error::TooManyCubes {
                limit: eval.limits.max_cubes,
            });
        }
        cubes = next;
        best = argmax(&cubes);
        let e = eta(best, &cubes);
        if e > eta_prev {
            monotone = false;
        }
        out.push(BsStep {
            step: k,
            card: cubes.len(),
            eta_log2: e,
        });
    }
    Ok(BsTrajectory {
        steps: out,
        a: a.clone(),
        dim,
        eta_nonincreasing: monotone,
        final_partition: Partition::new(
            cubes.into_iter().map(|(q, _)| q).collect(),
            initial.grid.clone(),
        ),
    })
}

/// `log2 (η_k (N_k - N_0)^{1+a})` for every step with `N_k > N_0`.
pub fn bs_products<T: Real>(traj: &BsTrajectory<T>) -> Vec<(usize, T)> {
    let n0 = traj.steps.first().map_or(0, |s| s.card);
    let e: T = T::one() + rational_to_real(&traj.a);
    traj.steps
        .iter()
        .filter(|s| s.card > n0)
        .map(|s| {
            (
                s.step,
                s.eta_log2 + e * T::lit(((s.card - n0) as f64).log2()),
            )
        })
        .collect()
}

/// `sup_k η_k (N_k - N_0)^{1+a} / (ε^{min(1,a)} J(Q_0))`, zero when no step
/// grew the partition.
pub fn bs_bound_check<T: Real>(traj: &BsTrajectory<T>, root_log2: T, eps: T) -> T {
    let a: T = rational_to_real(&traj.a);
    let denom = a.min(T::one()) * eps.log2() + root_log2;
    bs_products(traj)
        .into_iter()
        .map(|(_, p)| (p - denom).exp2())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{CubeId, GridScheme};

    fn root(d: usize) -> Partition {
        Partition::new(vec![CubeId::root(d)], GridScheme::classical(d))
    }

    #[test]
    fn lebesgue_uniform_refinement() {
        for d in [1usize, 2] {
            let one = BigRational::from_integer(1.into());
            let tr =
                birman_solomjak::<f64>(&SetFunctionSpec::lebesgue(d), &one, &root(d), 6).unwrap();
            for s in &tr.steps {
                assert_eq!(s.card, 1usize << (d * s.step));
                assert_eq!(s.eta_log2, -2.0 * (d * s.step) as f64);
            }
            assert!(tr.eta_nonincreasing);
        }
    }

    #[test]
    fn zero_steps_and_bound() {
        let one = BigRational::from_integer(1.into());
        let tr = birman_solomjak::<f64>(&SetFunctionSpec::lebesgue(1), &one, &root(1), 0).unwrap();
        assert_eq!(
            tr.steps,
            vec![BsStep {
                step: 0,
                card: 1,
                eta_log2: 0.0
            }]
        );
        assert_eq!(bs_bound_check(&tr, 0.0, 1.0), 0.0);
        let tr = birman_solomjak::<f64>(&SetFunctionSpec::lebesgue(1), &one, &root(1), 8).unwrap();
        let c = bs_bound_check(&tr, 0.0, 1.0);
        let want = (1..=8)
            .map(|k| 4f64.powi(-k) * (2f64.powi(k) - 1.0).powi(2))
            .fold(0.0, f64::max);
        assert!((c - want).abs() < 1e-12 && c < 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let zero = BigRational::from_integer(0.into());
        assert!(birman_solomjak::<f64>(&SetFunctionSpec::lebesgue(1), &zero, &root(1), 1).is_err());
        let half = Partition::new(
            vec![CubeId::new(1, vec![0]).unwrap()],
            GridScheme::classical(1),
        );
        let one = BigRational::from_integer(1.into());
        assert!(birman_solomjak::<f64>(&SetFunctionSpec::lebesgue(1), &one, &half, 1).is_err());
    }
}

//! Value distributions of a whole level, kept grouped and, for products,
//! factorised.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::dyadic::CubeId;
use crate::error::{Error, Result};
use crate::num::{log2_biguint, log_sum_exp2, Real};

/// Identifies what a group stands for, so its exact value can be recomputed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKey {
    Counts(Vec<u32>),
    Cube(CubeId),
    Pair(Box<GroupKey>, Box<GroupKey>),
}

/// `mult` cubes of level `n` sharing the value `2^log2`.
#[derive(Clone, Debug)]
pub struct Group<T> {
    pub log2: T,
    pub mult: BigUint,
    pub key: GroupKey,
}

/// The positive values of one level.
#[derive(Clone, Debug)]
pub enum LevelDist<T> {
    /// Sorted by decreasing value.
    Groups(Vec<Group<T>>),
    /// Values add in the log domain over all pairs.
    Product(Box<LevelDist<T>>, Box<LevelDist<T>>),
    /// Each value `v` becomes `scale * v + shift`, with `scale > 0`.
    Affine {
        inner: Box<LevelDist<T>>,
        scale: T,
        shift: T,
    },
}

pub(crate) fn sort_groups<T: Real>(groups: &mut [Group<T>]) {
    groups.sort_by(|a, b| b.log2.partial_cmp(&a.log2).unwrap_or(Ordering::Equal));
}

impl<T: Real> LevelDist<T> {
    pub fn from_groups(mut groups: Vec<Group<T>>) -> Self {
        groups.retain(|g| g.log2 > T::neg_infinity() && !g.mult.is_zero());
        sort_groups(&mut groups);
        LevelDist::Groups(groups)
    }

    pub fn max_log2(&self) -> T {
        match self {
            LevelDist::Groups(g) => g.first().map_or(T::neg_infinity(), |g| g.log2),
            LevelDist::Product(a, b) => {
                let (x, y) = (a.max_log2(), b.max_log2());
                if x == T::neg_infinity() || y == T::neg_infinity() {
                    T::neg_infinity()
                } else {
                    x + y
                }
            }
            LevelDist::Affine {
                inner,
                scale,
                shift,
            } => {
                let m = inner.max_log2();
                if m == T::neg_infinity() {
                    m
                } else {
                    *scale * m + *shift
                }
            }
        }
    }

    /// Number of cubes with positive value.
    pub fn positive_count(&self) -> BigUint {
        match self {
            LevelDist::Groups(g) => g.iter().map(|g| &g.mult).sum(),
            LevelDist::Product(a, b) => a.positive_count() * b.positive_count(),
            LevelDist::Affine { inner, .. } => inner.positive_count(),
        }
    }

    /// `log2 Σ_Q J(Q)^q` over positive cubes; `q = 0` counts them.
    ///
    /// Terms are combined by a pairwise log-sum-exp in group order, so the
    /// result is reproducible bit for bit.
    pub fn power_sum_log2(&self, q: T) -> T {
        match self {
            LevelDist::Groups(groups) => {
                if q == T::zero() {
                    let total: BigUint = groups.iter().map(|g| &g.mult).sum();
                    return T::lit(log2_biguint(&total));
                }
                let terms: Vec<T> = groups
                    .iter()
                    .map(|g| q * g.log2 + T::lit(log2_biguint(&g.mult)))
                    .collect();
                log_sum_exp2(&terms)
            }
            LevelDist::Product(a, b) => {
                let (x, y) = (a.power_sum_log2(q), b.power_sum_log2(q));
                if x == T::neg_infinity() || y == T::neg_infinity() {
                    T::neg_infinity()
                } else {
                    x + y
                }
            }
            LevelDist::Affine {
                inner,
                scale,
                shift,
            } => {
                let v = inner.power_sum_log2(*scale * q);
                if v == T::neg_infinity() {
                    v
                } else {
                    v + *shift * q
                }
            }
        }
    }

    /// Explicit group list, sorted by decreasing value.
    pub fn materialize(&self, limit: usize) -> Result<Vec<Group<T>>> {
        match self {
            LevelDist::Groups(g) => {
                if g.len() > limit {
                    return Err(Error::GroupingTooLarge {
                        groups: g.len(),
                        limit,
                    });
                }
                Ok(g.clone())
            }
            LevelDist::Affine {
                inner,
                scale,
                shift,
            } => Ok(inner
                .materialize(limit)?
                .into_iter()
                .map(|g| Group {
                    log2: *scale * g.log2 + *shift,
                    ..g
                })
                .collect()),
            LevelDist::Product(a, b) => {
                let ga = a.materialize(limit)?;
                let gb = b.materialize(limit)?;
                let total = ga.len().saturating_mul(gb.len());
                if total > limit {
                    return Err(Error::GroupingTooLarge {
                        groups: total,
                        limit,
                    });
                }
                let mut out = Vec::with_capacity(total);
                for x in &ga {
                    for y in &gb {
                        out.push(Group {
                            log2: x.log2 + y.log2,
                            mult: &x.mult * &y.mult,
                            key: GroupKey::Pair(Box::new(x.key.clone()), Box::new(y.key.clone())),
                        });
                    }
                }
                sort_groups(&mut out);
                Ok(out)
            }
        }
    }

    /// Cubes with `log2 J >= threshold`, with the boundary decided by `at_least`
    /// for groups within `eps` of the threshold.
    pub fn count_at_least(
        &self,
        threshold: T,
        eps: T,
        limit: usize,
        mut at_least: impl FnMut(&Group<T>) -> bool,
    ) -> Result<BigUint> {
        // Products count pairs directly, without materialising all of them.
        if let LevelDist::Product(a, b) = self {
            let ga = a.materialize(limit)?;
            let gb = b.materialize(limit)?;
            if ga.len().saturating_mul(gb.len()) > limit {
                return Ok(count_pairs(&ga, &gb, threshold));
            }
        }
        let groups = self.materialize(limit)?;
        let mut total = BigUint::zero();
        for g in &groups {
            if g.log2 > threshold + eps {
                total += &g.mult;
            } else if g.log2 < threshold - eps {
                break;
            } else if at_least(g) {
                total += &g.mult;
            }
        }
        Ok(total)
    }
}

/// Pairs with `a + b >= threshold`, both lists sorted by decreasing value.
fn count_pairs<T: Real>(a: &[Group<T>], b: &[Group<T>], threshold: T) -> BigUint {
    let mut prefix = Vec::with_capacity(b.len() + 1);
    let mut acc = BigUint::zero();
    prefix.push(acc.clone());
    for g in b {
        acc += &g.mult;
        prefix.push(acc.clone());
    }
    let mut total = BigUint::zero();
    let mut j = 0usize;
    // Walking a upwards, the admissible prefix of b only grows.
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.reverse();
    for &i in &idx {
        let need = threshold - a[i].log2;
        while j < b.len() && b[j].log2 >= need {
            j += 1;
        }
        total += &a[i].mult * &prefix[j];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn groups(vals: &[(f64, u32)]) -> LevelDist<f64> {
        LevelDist::from_groups(
            vals.iter()
                .enumerate()
                .map(|(i, &(v, m))| Group {
                    log2: v,
                    mult: BigUint::from(m),
                    key: GroupKey::Counts(vec![i as u32]),
                })
                .collect(),
        )
    }

    #[test]
    fn product_power_sums_factorise() {
        let a = groups(&[(-1.0, 1), (-2.0, 3)]);
        let b = groups(&[(-0.5, 2)]);
        let p = LevelDist::Product(Box::new(a.clone()), Box::new(b.clone()));
        let flat = LevelDist::from_groups(p.materialize(100).unwrap());
        for q in [0.0, 0.5, 1.0, 2.5] {
            assert!((p.power_sum_log2(q) - flat.power_sum_log2(q)).abs() < 1e-12);
        }
        assert_eq!(p.positive_count(), BigUint::from(8u32));
        assert_eq!(p.max_log2(), -1.5);
    }

    #[test]
    fn affine_power_sum() {
        let a = groups(&[(-1.0, 1), (-2.0, 1)]);
        let t = LevelDist::Affine {
            inner: Box::new(a),
            scale: 2.0,
            shift: -1.0,
        };
        let want = (2f64.powf(-3.0 * 1.5) + 2f64.powf(-5.0 * 1.5)).log2();
        assert!((t.power_sum_log2(1.5) - want).abs() < 1e-12);
    }

    #[test]
    fn pair_counting_matches_materialised() {
        let a = groups(&[(-1.0, 1), (-2.0, 3), (-4.0, 2)]);
        let b = groups(&[(-0.5, 2), (-3.0, 5)]);
        let ga = a.materialize(10).unwrap();
        let gb = b.materialize(10).unwrap();
        let p = LevelDist::Product(Box::new(a), Box::new(b));
        for th in [-0.5, -1.5, -2.5, -3.9, -4.5, -6.0, -8.0] {
            let direct = p.count_at_least(th, 0.0, 100, |g| g.log2 >= th).unwrap();
            assert_eq!(count_pairs(&ga, &gb, th), direct, "threshold {th}");
        }
    }
}

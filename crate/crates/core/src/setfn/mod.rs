//! Set functions `J: S -> [0, ∞)` built from a [`SetFunctionSpec`].
//!
//! Values are available in the log2 domain for every spec and as exact
//! rationals where the set function allows it. Threshold comparisons go through the
//! log channel and fall back to exact arithmetic when the two sides are too
//! close to call.

pub mod cascade;
pub mod level;
pub mod madic;
pub mod spec;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use cascade::Cascade;
pub use level::{Group, GroupKey, LevelDist};
pub use madic::MAdicMeasure;
pub use spec::{Schedule, SetFunctionSpec};

use crate::dyadic::{CubeId, GridScheme, HARD_ENUMERATION_BITS};
use crate::error::{Error, Result};
use crate::num::{Log2, Real};
use crate::rational::{parse_rational, rational_pow, rational_to_real};

/// Resource guards shared by the evaluator and the algorithms built on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Limits {
    /// Streaming a level requires `n * d` at most this.
    pub enumeration_bits: u32,
    /// Cap on grouped level distributions.
    pub max_groups: usize,
    /// Cap on materialised cubes in traversals.
    pub max_cubes: usize,
    /// Cap on heap pops in best-first level maxima.
    pub max_pops: usize,
    /// Depth guard for closed-form (digit-local) set functions.
    pub max_depth_closed: u32,
    /// Depth guard for everything else.
    pub max_depth_general: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration_bits: 26,
            max_groups: 4_000_000,
            max_cubes: 20_000_000,
            max_pops: 2_000_000,
            max_depth_closed: 10_000,
            max_depth_general: 64,
        }
    }
}

/// A threshold `t = 1/x > 0`, with its exact value when known.
#[derive(Clone, Debug, PartialEq)]
pub struct Threshold<T> {
    pub log2: T,
    pub exact: Option<BigRational>,
}

impl<T: Real> Threshold<T> {
    pub fn from_rational(r: BigRational) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::InvalidArgument(format!(
                "threshold {r} must be positive"
            )));
        }
        Ok(Threshold {
            log2: Log2::<T>::from_rational(&r).log2(),
            exact: Some(r),
        })
    }

    pub fn from_log2(log2: T) -> Self {
        Threshold { log2, exact: None }
    }

    /// `2^k`, exact.
    pub fn pow2(k: i64) -> Self {
        Threshold {
            log2: T::lit(k as f64),
            exact: Some(crate::num::pow2_rational(k)),
        }
    }

    /// Parses `"1e-3"`, `"1/1000"` or `"0.001"` as an exact threshold.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_rational(parse_rational(text)?)
    }

    /// The threshold `1/x`.
    pub fn from_x_log2(log2_x: T) -> Self {
        Threshold::from_log2(-log2_x)
    }

    pub fn value(&self) -> T {
        self.log2.exp2()
    }
}

#[derive(Clone, Debug)]
enum Node<T> {
    Cascade(Cascade<T>),
    MAdic(MAdicMeasure<T>),
    Product {
        left: Box<Node<T>>,
        right: Box<Node<T>>,
        left_dim: usize,
    },
    Power {
        inner: Box<Node<T>>,
        s: T,
        int_exp: Option<BigUint>,
    },
    Scale {
        inner: Box<Node<T>>,
        c_log: T,
        c: BigRational,
    },
    /// `J^b Λ^a` with `a > 0`.
    LambdaPos {
        inner: Box<Node<T>>,
        b: T,
        b_int: Option<BigUint>,
        da: T,
        da_int: Option<i64>,
    },
    /// Truncated supremum over subcubes, `a <= 0`.
    LambdaSup {
        inner: Box<Node<T>>,
        b: T,
        da: T,
        a_zero: bool,
        depth: u32,
        dim: usize,
    },
}

fn positive_integer(r: &BigRational) -> Option<BigUint> {
    (r.is_integer() && r.is_positive()).then(|| r.to_integer().to_biguint().expect("positive"))
}

impl<T: Real> Node<T> {
    fn compile(spec: &SetFunctionSpec) -> Node<T> {
        match spec {
            SetFunctionSpec::DyadicSelfSimilar { d, weights } => {
                Node::Cascade(Cascade::self_similar(*d, weights))
            }
            SetFunctionSpec::MAdicSelfSimilar {
                base,
                weights,
                digits,
            } => Node::MAdic(MAdicMeasure::new(SetFunctionSpec::positional_weights(
                *base, weights, digits,
            ))),
            SetFunctionSpec::HomogeneousOscillating { d, schedule } => {
                Node::Cascade(Cascade::oscillating(*d, &schedule.prefix, &schedule.period))
            }
            SetFunctionSpec::Product { left, right } => {
                let (l, r) = (Node::compile(left), Node::compile(right));
                match (l, r) {
                    (Node::Cascade(a), Node::Cascade(b)) => Node::Cascade(Cascade::product(&a, &b)),
                    (l, r) => Node::Product {
                        left: Box::new(l),
                        right: Box::new(r),
                        left_dim: left.dim(),
                    },
                }
            }
            SetFunctionSpec::Power { inner, s } => match Node::compile(inner) {
                Node::Cascade(c) => Node::Cascade(c.power(s)),
                n => Node::Power {
                    inner: Box::new(n),
                    s: rational_to_real(s),
                    int_exp: positive_integer(s),
                },
            },
            SetFunctionSpec::Scale { inner, c } => match Node::compile(inner) {
                Node::Cascade(cas) => Node::Cascade(cas.scale(c)),
                n => Node::Scale {
                    inner: Box::new(n),
                    c_log: Log2::<T>::from_rational(c).log2(),
                    c: c.clone(),
                },
            },
            SetFunctionSpec::LambdaWeight {
                inner,
                a,
                b,
                sup_depth,
            } => {
                let dim = inner.dim();
                match Node::compile(inner) {
                    Node::Cascade(c) => Node::Cascade(c.lambda(a, b, *sup_depth)),
                    n => {
                        let da = a * BigRational::from_integer(dim.into());
                        if a.is_positive() {
                            Node::LambdaPos {
                                inner: Box::new(n),
                                b: rational_to_real(b),
                                b_int: positive_integer(b),
                                da: rational_to_real(&da),
                                da_int: if da.is_integer() {
                                    da.to_integer().to_i64()
                                } else {
                                    None
                                },
                            }
                        } else {
                            Node::LambdaSup {
                                inner: Box::new(n),
                                b: rational_to_real(b),
                                da: rational_to_real(&da),
                                a_zero: a.is_zero(),
                                depth: *sup_depth,
                                dim,
                            }
                        }
                    }
                }
            }
        }
    }

    fn exact_supported(&self) -> bool {
        match self {
            Node::Cascade(c) => c.is_exact(),
            Node::MAdic(_) => true,
            Node::Product { left, right, .. } => left.exact_supported() && right.exact_supported(),
            Node::Power { inner, int_exp, .. } => int_exp.is_some() && inner.exact_supported(),
            Node::Scale { inner, .. } => inner.exact_supported(),
            Node::LambdaPos {
                inner,
                b_int,
                da_int,
                ..
            } => b_int.is_some() && da_int.is_some() && inner.exact_supported(),
            Node::LambdaSup { .. } => false,
        }
    }

    fn value_log2(&self, cube: &CubeId) -> T {
        let ninf = T::neg_infinity();
        match self {
            Node::Cascade(c) => c.value_log2(cube),
            Node::MAdic(m) => m.interval_log2(cube.level, cube.coords[0]),
            Node::Product {
                left,
                right,
                left_dim,
            } => {
                let (a, b) = cube.split(*left_dim);
                let x = left.value_log2(&a);
                if x == ninf {
                    return ninf;
                }
                let y = right.value_log2(&b);
                if y == ninf {
                    ninf
                } else {
                    x + y
                }
            }
            Node::Power { inner, s, .. } => {
                let v = inner.value_log2(cube);
                if v == ninf {
                    v
                } else {
                    *s * v
                }
            }
            Node::Scale { inner, c_log, .. } => inner.value_log2(cube) + *c_log,
            Node::LambdaPos { inner, b, da, .. } => {
                let v = inner.value_log2(cube);
                if v == ninf {
                    v
                } else {
                    *b * v - *da * T::lit(cube.level as f64)
                }
            }
            Node::LambdaSup {
                inner,
                b,
                da,
                a_zero,
                depth,
                dim,
            } => sup_over_subcubes(inner, cube, *b, *da, *a_zero, *depth, *dim),
        }
    }

    fn value_exact(&self, cube: &CubeId) -> Result<BigRational> {
        match self {
            Node::Cascade(c) => c.value_exact(cube),
            Node::MAdic(m) => m.interval_exact(cube.level, cube.coords[0]),
            Node::Product {
                left,
                right,
                left_dim,
            } => {
                let (a, b) = cube.split(*left_dim);
                let x = left.value_exact(&a)?;
                if x.is_zero() {
                    return Ok(x);
                }
                Ok(x * right.value_exact(&b)?)
            }
            Node::Power { inner, int_exp, .. } => match int_exp {
                Some(k) => Ok(rational_pow(&inner.value_exact(cube)?, k)),
                None => Err(Error::ExactUnavailable),
            },
            Node::Scale { inner, c, .. } => Ok(inner.value_exact(cube)? * c),
            Node::LambdaPos {
                inner,
                b_int,
                da_int,
                ..
            } => match (b_int, da_int) {
                (Some(k), Some(da)) => {
                    let v = rational_pow(&inner.value_exact(cube)?, k);
                    Ok(v * crate::num::pow2_rational(-da * cube.level as i64))
                }
                _ => Err(Error::ExactUnavailable),
            },
            Node::LambdaSup { .. } => Err(Error::ExactUnavailable),
        }
    }

    fn key_exact(&self, key: &GroupKey, level: u32) -> Option<BigRational> {
        match (self, key) {
            (_, GroupKey::Cube(c)) => self.value_exact(c).ok(),
            (Node::Cascade(c), GroupKey::Counts(counts)) => c.exact_from_counts(counts),
            (Node::Product { left, right, .. }, GroupKey::Pair(a, b)) => {
                Some(left.key_exact(a, level)? * right.key_exact(b, level)?)
            }
            (Node::Power { inner, int_exp, .. }, k) => {
                Some(rational_pow(&inner.key_exact(k, level)?, int_exp.as_ref()?))
            }
            (Node::Scale { inner, c, .. }, k) => Some(inner.key_exact(k, level)? * c),
            (
                Node::LambdaPos {
                    inner,
                    b_int,
                    da_int,
                    ..
                },
                k,
            ) => {
                let v = rational_pow(&inner.key_exact(k, level)?, b_int.as_ref()?);
                Some(v * crate::num::pow2_rational(-(*da_int)? * level as i64))
            }
            _ => None,
        }
    }

    fn dim(&self) -> usize {
        match self {
            Node::Cascade(c) => c.dim,
            Node::MAdic(_) => 1,
            Node::Product { left, right, .. } => left.dim() + right.dim(),
            Node::Power { inner, .. }
            | Node::Scale { inner, .. }
            | Node::LambdaPos { inner, .. } => inner.dim(),
            Node::LambdaSup { dim, .. } => *dim,
        }
    }

    fn level_dist(&self, level: u32, limits: &Limits) -> Result<LevelDist<T>> {
        Ok(match self {
            Node::Cascade(c) => {
                let groups = c.level_groups(level, limits.max_groups)?;
                LevelDist::from_groups(
                    groups
                        .into_iter()
                        .map(|g| Group {
                            log2: c.log2_from_counts(level, &g.counts),
                            mult: g.mult,
                            key: GroupKey::Counts(g.counts),
                        })
                        .collect(),
                )
            }
            Node::Product { left, right, .. } => LevelDist::Product(
                Box::new(left.level_dist(level, limits)?),
                Box::new(right.level_dist(level, limits)?),
            ),
            Node::Power { inner, s, .. } => LevelDist::Affine {
                inner: Box::new(inner.level_dist(level, limits)?),
                scale: *s,
                shift: T::zero(),
            },
            Node::Scale { inner, c_log, .. } => LevelDist::Affine {
                inner: Box::new(inner.level_dist(level, limits)?),
                scale: T::one(),
                shift: *c_log,
            },
            Node::LambdaPos { inner, b, da, .. } => LevelDist::Affine {
                inner: Box::new(inner.level_dist(level, limits)?),
                scale: *b,
                shift: -*da * T::lit(level as f64),
            },
            Node::MAdic(_) | Node::LambdaSup { .. } => {
                let grid = GridScheme::classical(self.dim());
                let groups = grid
                    .level_members(level, limits.enumeration_bits)?
                    .map(|q| Group {
                        log2: self.value_log2(&q),
                        mult: BigUint::one(),
                        key: GroupKey::Cube(q),
                    })
                    .collect();
                LevelDist::from_groups(groups)
            }
        })
    }

    fn positive_count(&self, level: u32, limits: &Limits) -> Result<BigUint> {
        Ok(match self {
            Node::Cascade(_) => self.level_dist(level, limits)?.positive_count(),
            Node::MAdic(m) => {
                let _ = GridScheme::classical(1).level_members(level, limits.enumeration_bits)?;
                let n = (0..1u64 << level)
                    .filter(|&k| m.interval_positive(level, k))
                    .count();
                BigUint::from(n)
            }
            Node::Product { left, right, .. } => {
                left.positive_count(level, limits)? * right.positive_count(level, limits)?
            }
            Node::Power { inner, .. }
            | Node::Scale { inner, .. }
            | Node::LambdaPos { inner, .. } => inner.positive_count(level, limits)?,
            Node::LambdaSup {
                inner,
                a_zero,
                depth,
                ..
            } => {
                if *a_zero && level == 0 && *depth == 0 {
                    BigUint::zero()
                } else {
                    inner.positive_count(level, limits)?
                }
            }
        })
    }

    /// `log2 max_{Q ∈ D_n} J(Q)` on the classical grid.
    fn level_max(&self, level: u32, limits: &Limits) -> Result<T> {
        let ninf = T::neg_infinity();
        Ok(match self {
            Node::Cascade(c) => c.level_max(level),
            Node::MAdic(_) => best_first_max(self, &GridScheme::classical(1), level, limits)?,
            Node::Product { left, right, .. } => {
                let (a, b) = (
                    left.level_max(level, limits)?,
                    right.level_max(level, limits)?,
                );
                if a == ninf || b == ninf {
                    ninf
                } else {
                    a + b
                }
            }
            Node::Power { inner, s, .. } => {
                let v = inner.level_max(level, limits)?;
                if v == ninf {
                    v
                } else {
                    *s * v
                }
            }
            Node::Scale { inner, c_log, .. } => inner.level_max(level, limits)? + *c_log,
            Node::LambdaPos { inner, b, da, .. } => {
                let v = inner.level_max(level, limits)?;
                if v == ninf {
                    v
                } else {
                    *b * v - *da * T::lit(level as f64)
                }
            }
            Node::LambdaSup {
                inner,
                b,
                da,
                a_zero,
                depth,
                dim,
            } => {
                let mut best = ninf;
                for k in 0..=*depth {
                    let l = level + k;
                    let v = inner.level_max(l, limits)?;
                    if v == ninf {
                        continue;
                    }
                    let cand = *b * v + level_term(l, *da, *a_zero, *dim);
                    if cand > best {
                        best = cand;
                    }
                }
                best
            }
        })
    }
}

fn level_term<T: Real>(level: u32, da: T, a_zero: bool, dim: usize) -> T {
    if a_zero {
        T::lit((level as f64 * dim as f64).log2())
    } else {
        -da * T::lit(level as f64)
    }
}

/// Branch and bound over the subcubes of `cube` down to `depth` levels.
fn sup_over_subcubes<T: Real>(
    inner: &Node<T>,
    cube: &CubeId,
    b: T,
    da: T,
    a_zero: bool,
    depth: u32,
    dim: usize,
) -> T {
    let ninf = T::neg_infinity();
    let deepest = cube.level + depth;
    let mut best = ninf;
    let mut stack = vec![(cube.clone(), inner.value_log2(cube))];
    while let Some((q, v)) = stack.pop() {
        if v == ninf {
            continue;
        }
        let cand = b * v + level_term(q.level, da, a_zero, dim);
        if cand > best {
            best = cand;
        }
        if q.level < deepest {
            // The level term grows with depth and inner values shrink.
            let bound = b * v + level_term(deepest, da, a_zero, dim);
            if bound > best {
                for ch in q.children() {
                    let w = inner.value_log2(&ch);
                    stack.push((ch, w));
                }
            }
        }
    }
    best
}

#[derive(PartialEq)]
struct HeapItem<T> {
    log2: T,
    cube: CubeId,
}

impl<T: Real> Eq for HeapItem<T> {}

impl<T: Real> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for HeapItem<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log2
            .partial_cmp(&other.log2)
            .unwrap_or(Ordering::Equal)
            .then(self.cube.level.cmp(&other.cube.level))
            .then_with(|| other.cube.coords.cmp(&self.cube.coords))
    }
}

/// Level maximum by best-first search; exact for monotone set functions.
fn best_first_max<T: Real>(
    node: &Node<T>,
    grid: &GridScheme,
    level: u32,
    limits: &Limits,
) -> Result<T> {
    let mut heap = BinaryHeap::new();
    let root = CubeId::root(grid.dim());
    heap.push(HeapItem {
        log2: node.value_log2(&root),
        cube: root,
    });
    let mut pops = 0usize;
    while let Some(item) = heap.pop() {
        if item.log2 == T::neg_infinity() {
            break;
        }
        if item.cube.level == level {
            if grid.is_member(&item.cube) {
                return Ok(item.log2);
            }
            continue;
        }
        pops += 1;
        if pops > limits.max_pops {
            return Err(Error::TooManyCubes {
                limit: limits.max_pops,
            });
        }
        for ch in item.cube.children() {
            let v = node.value_log2(&ch);
            heap.push(HeapItem { log2: v, cube: ch });
        }
    }
    Ok(T::neg_infinity())
}

/// Sampled level suprema `j_n` for the uniform vanishing axiom.
#[derive(Clone, Debug)]
pub struct VanishingReport<T> {
    pub levels: Vec<u32>,
    pub sup_log2: Vec<T>,
    /// `j_n < 1` for every sampled `n >= 1`.
    pub below_one: bool,
    pub nonincreasing: bool,
    pub strictly_decreasing: bool,
}

/// A compiled set function.
#[derive(Clone, Debug)]
pub struct Evaluator<T> {
    spec: SetFunctionSpec,
    node: Node<T>,
    dim: usize,
    exact: bool,
    pub limits: Limits,
}

impl<T: Real> Evaluator<T> {
    pub fn new(spec: &SetFunctionSpec) -> Result<Self> {
        spec.validate()?;
        let node = Node::compile(spec);
        Ok(Evaluator {
            spec: spec.clone(),
            exact: node.exact_supported(),
            dim: node.dim(),
            node,
            limits: Limits::default(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(&SetFunctionSpec::from_json(text)?)
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn spec(&self) -> &SetFunctionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn supports_exact(&self) -> bool {
        self.exact
    }

    /// The digit-local form, when the set function folds into one.
    pub fn cascade(&self) -> Option<&Cascade<T>> {
        match &self.node {
            Node::Cascade(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        self.cascade().is_some()
    }

    /// Depth guard for traversals of this set function.
    pub fn max_depth(&self) -> u32 {
        if self.is_closed_form() {
            self.limits.max_depth_closed
        } else {
            self.limits.max_depth_general
        }
    }

    fn check_dim(&self, cube: &CubeId) -> Result<()> {
        if cube.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: cube.dim(),
            });
        }
        Ok(())
    }

    pub fn check_grid(&self, grid: &GridScheme) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: grid.dim(),
            });
        }
        Ok(())
    }

    pub fn value_log2(&self, cube: &CubeId) -> Result<Log2<T>> {
        self.check_dim(cube)?;
        Ok(Log2(self.node.value_log2(cube)))
    }

    pub fn value_exact(&self, cube: &CubeId) -> Result<BigRational> {
        self.check_dim(cube)?;
        if !self.exact {
            return Err(Error::ExactUnavailable);
        }
        self.node.value_exact(cube)
    }

    pub fn root_log2(&self) -> Log2<T> {
        Log2(self.node.value_log2(&CubeId::root(self.dim)))
    }

    /// Width of the log window inside which comparisons are settled exactly.
    pub fn tie_eps(x: T) -> T {
        T::epsilon() * T::lit(65536.0) * x.abs().max(T::one())
    }

    /// `J >= t`, given `log2 J` and a way to get the exact value.
    pub fn meets_with(
        &self,
        log2: T,
        t: &Threshold<T>,
        exact: impl FnOnce() -> Option<BigRational>,
    ) -> bool {
        if log2 == T::neg_infinity() {
            return false;
        }
        if (log2 - t.log2).abs() <= Self::tie_eps(t.log2) && self.exact {
            if let (Some(te), Some(v)) = (&t.exact, exact()) {
                return v >= *te;
            }
        }
        log2 >= t.log2
    }

    /// `J(Q) >= t` for a cube whose log value is already known.
    pub fn meets(&self, cube: &CubeId, log2: T, t: &Threshold<T>) -> bool {
        self.meets_with(log2, t, || self.node.value_exact(cube).ok())
    }

    /// Orders two cubes by value, settling near ties exactly.
    pub fn cmp_values(&self, a: (&CubeId, T), b: (&CubeId, T)) -> Ordering {
        if a.1 == b.1 && !self.exact {
            return Ordering::Equal;
        }
        if (a.1 - b.1).abs() <= Self::tie_eps(a.1) && self.exact && a.1 > T::neg_infinity() {
            if let (Ok(x), Ok(y)) = (self.node.value_exact(a.0), self.node.value_exact(b.0)) {
                return x.cmp(&y);
            }
        }
        a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)
    }

    pub fn group_exact(&self, group: &Group<T>, level: u32) -> Option<BigRational> {
        if !self.exact {
            return None;
        }
        self.node.key_exact(&group.key, level)
    }

    /// Positive values of `S_n`, grouped.
    pub fn level_dist(&self, grid: &GridScheme, level: u32) -> Result<LevelDist<T>> {
        self.check_grid(grid)?;
        if grid.is_classical() {
            return self.node.level_dist(level, &self.limits);
        }
        let groups = grid
            .level_members(level, self.limits.enumeration_bits)?
            .map(|q| Group {
                log2: self.node.value_log2(&q),
                mult: BigUint::one(),
                key: GroupKey::Cube(q),
            })
            .collect();
        Ok(LevelDist::from_groups(groups))
    }

    /// `log2 max_{Q ∈ S_n} J(Q)`.
    pub fn sup_level_log2(&self, grid: &GridScheme, level: u32) -> Result<Log2<T>> {
        self.check_grid(grid)?;
        if grid.is_classical() {
            return Ok(Log2(self.node.level_max(level, &self.limits)?));
        }
        let bits = level as u64 * self.dim as u64;
        if bits <= self.limits.enumeration_bits.min(HARD_ENUMERATION_BITS) as u64 {
            let m = grid
                .level_members(level, self.limits.enumeration_bits)?
                .map(|q| self.node.value_log2(&q))
                .fold(T::neg_infinity(), T::max);
            return Ok(Log2(m));
        }
        Ok(Log2(best_first_max(&self.node, grid, level, &self.limits)?))
    }

    /// `card {Q ∈ S_n : J(Q) > 0}`.
    pub fn positive_count(&self, grid: &GridScheme, level: u32) -> Result<BigUint> {
        self.check_grid(grid)?;
        if grid.is_classical() {
            return self.node.positive_count(level, &self.limits);
        }
        Ok(self.level_dist(grid, level)?.positive_count())
    }

    /// `card {Q ∈ S_n : J(Q) >= t}`.
    pub fn count_at_least(
        &self,
        grid: &GridScheme,
        level: u32,
        t: &Threshold<T>,
    ) -> Result<BigUint> {
        let dist = self.level_dist(grid, level)?;
        let eps = Self::tie_eps(t.log2);
        dist.count_at_least(t.log2, eps, self.limits.max_groups, |g| {
            self.meets_with(g.log2, t, || self.group_exact(g, level))
        })
    }

    /// Change in the level supremum when the truncation depth of `a <= 0`
    /// weights is reduced by one; `None` when no truncation is involved.
    pub fn sup_depth_gap(&self, level: u32) -> Option<T> {
        match &self.node {
            Node::Cascade(c) => {
                let g = c.offset.truncation_gap(level);
                (g > T::zero()).then_some(g)
            }
            Node::LambdaSup {
                inner,
                b,
                da,
                a_zero,
                depth,
                dim,
            } if *depth > 0 => {
                let q = CubeId::root(*dim);
                let full = sup_over_subcubes(inner, &q, *b, *da, *a_zero, *depth, *dim);
                let less = sup_over_subcubes(inner, &q, *b, *da, *a_zero, *depth - 1, *dim);
                Some((full - less).abs())
            }
            _ => None,
        }
    }

    /// Warning text when the truncated supremum has not settled to `2^-20`.
    pub fn sup_depth_warning(&self, level: u32) -> Option<String> {
        let gap = self.sup_depth_gap(level)?;
        (gap > T::lit(2f64.powi(-20))).then(|| {
            format!("truncated supremum not stable at level {level}: last two depths differ by {gap} (log2)")
        })
    }

    pub fn uniformly_vanishing_check(
        &self,
        grid: &GridScheme,
        horizon: u32,
    ) -> Result<VanishingReport<T>> {
        let mut levels = Vec::new();
        let mut sup_log2 = Vec::new();
        for n in 0..=horizon {
            levels.push(n);
            sup_log2.push(self.sup_level_log2(grid, n)?.log2());
        }
        let tail = &sup_log2[1.min(sup_log2.len())..];
        Ok(VanishingReport {
            below_one: tail.iter().all(|&v| v < T::zero()),
            nonincreasing: tail.windows(2).all(|w| w[1] <= w[0]),
            strictly_decreasing: tail.windows(2).all(|w| w[1] < w[0]),
            levels,
            sup_log2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(level: u32, coords: &[u64]) -> CubeId {
        CubeId::new(level, coords.to_vec()).unwrap()
    }

    #[test]
    fn lebesgue_values() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(1)).unwrap();
        assert_eq!(e.value_log2(&cube(5, &[3])).unwrap().log2(), -5.0);
        assert!(e.value_log2(&cube(1, &[0, 0])).is_err());
    }

    #[test]
    fn binary_measure_cube() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::dyadic(1, &["0.2", "0.8"])).unwrap();
        let q = cube(3, &[7]);
        assert!((e.value_log2(&q).unwrap().log2() - 3.0 * 0.8f64.log2()).abs() < 1e-14);
        assert_eq!(e.value_exact(&q).unwrap(), parse_rational("0.512").unwrap());
    }

    #[test]
    fn cantor_product_cube() {
        let spec = SetFunctionSpec::cantor("0.1").product(SetFunctionSpec::cantor("0.1"));
        let e = Evaluator::<f64>::new(&spec).unwrap();
        assert!(!e.is_closed_form());
        let q = cube(1, &[0, 0]);
        assert!((e.value_log2(&q).unwrap().log2() - 0.01f64.log2()).abs() < 1e-12);
        assert_eq!(e.value_exact(&q).unwrap(), parse_rational("0.01").unwrap());
        assert_eq!(e.root_log2().log2(), 0.0);
    }

    #[test]
    fn level_suprema() {
        let g2 = GridScheme::classical(2);
        let leb = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(2)).unwrap();
        assert_eq!(leb.sup_level_log2(&g2, 3).unwrap().log2(), -6.0);
        let bin = Evaluator::<f64>::new(&SetFunctionSpec::dyadic(1, &["0.2", "0.8"])).unwrap();
        let s = bin
            .sup_level_log2(&GridScheme::classical(1), 10)
            .unwrap()
            .log2();
        assert!((s - 10.0 * 0.8f64.log2()).abs() < 1e-12);
        let weighted_quad =
            SetFunctionSpec::dyadic(2, &["0.08", "0.2", "0.36", "0.36"]).lambda("-1/2", "1");
        let e = Evaluator::<f64>::new(&weighted_quad).unwrap();
        let s = e.sup_level_log2(&g2, 5).unwrap().log2();
        assert!((s - 5.0 * 0.72f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn lambda_sup_matches_cascade_form() {
        // a < 0 with growth: compare the generic branch and bound with the folded form.
        let inner = SetFunctionSpec::dyadic(1, &["0.3", "0.7"]);
        let spec = inner.clone().lambda("-2", "1");
        let folded = Evaluator::<f64>::new(&spec).unwrap();
        let generic = Node::<f64>::LambdaSup {
            inner: Box::new(Node::MAdic(MAdicMeasure::new(vec![
                parse_rational("0.3").unwrap(),
                parse_rational("0.7").unwrap(),
            ]))),
            b: 1.0,
            da: -2.0,
            a_zero: false,
            depth: 6,
            dim: 1,
        };
        let folded = match &folded.node {
            Node::Cascade(c) => {
                let mut c = c.clone();
                if let cascade::Offset::SupTail { depth, .. } = &mut c.offset {
                    *depth = 6;
                }
                c
            }
            _ => unreachable!(),
        };
        for q in [cube(0, &[0]), cube(2, &[1]), cube(4, &[9])] {
            let a = generic.value_log2(&q);
            let b = folded.value_log2(&q);
            assert!((a - b).abs() < 1e-10, "{q}: {a} vs {b}");
        }
    }

    #[test]
    fn interior_supremum_and_vanishing() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(1)).unwrap();
        let gi = GridScheme::interior(1);
        assert_eq!(e.sup_level_log2(&gi, 4).unwrap().log2(), -4.0);
        let r = e
            .uniformly_vanishing_check(&GridScheme::classical(1), 10)
            .unwrap();
        assert!(r.below_one && r.strictly_decreasing);
        let osc = SetFunctionSpec::oscillating(1, Schedule::alternating_blocks(2, 1, 1));
        let r = Evaluator::<f64>::new(&osc)
            .unwrap()
            .uniformly_vanishing_check(&GridScheme::classical(1), 8)
            .unwrap();
        assert!(r.nonincreasing && !r.strictly_decreasing);
        assert_eq!(r.sup_log2[8], -4.0);
    }

    #[test]
    fn thresholds_resolve_ties_exactly() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(2)).unwrap();
        let t = Threshold::<f64>::parse("1/16").unwrap();
        let q = cube(2, &[1, 1]);
        let v = e.value_log2(&q).unwrap().log2();
        assert!(e.meets(&q, v, &t));
        assert!(!e.meets(&q, v - 1.0, &t));
        assert_eq!(
            e.count_at_least(&GridScheme::classical(2), 2, &t).unwrap(),
            BigUint::from(16u32)
        );
    }

    #[test]
    fn sup_depth_warning_reports_unstable_truncation() {
        let spec = SetFunctionSpec::lebesgue(1).lambda("-2", "1");
        let e = Evaluator::<f64>::new(&spec).unwrap();
        assert!(e.sup_depth_warning(0).is_some());
        let weighted_quad =
            SetFunctionSpec::dyadic(2, &["0.08", "0.2", "0.36", "0.36"]).lambda("-1/2", "1");
        assert!(Evaluator::<f64>::new(&weighted_quad)
            .unwrap()
            .sup_depth_warning(0)
            .is_none());
    }
}

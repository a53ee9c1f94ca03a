//! Digit-local set functions.
//!
//! A cascade assigns to each child index at step `j` either nothing (the
//! child has value zero) or a class. The log value of a level-`n` cube is
//!
//! ```text
//! root + offset(n) + Σ_k count_k · log_k
//! ```
//!
//! where `count_k` is the number of steps on the digit path that landed in
//! class `k`. Self-similar leaves, oscillating leaves, their products,
//! powers, scalings and `Λ`-weights all fold into this form, which makes
//! level statistics a matter of counting class vectors.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::dyadic::CubeId;
use crate::error::{Error, Result};
use crate::num::{Log2, Real};
use crate::rational::{rational_pow, rational_to_real};

#[derive(Clone, Debug, PartialEq)]
pub struct Class<T> {
    pub log2: T,
    pub exact: Option<BigRational>,
}

impl<T: Real> Class<T> {
    pub fn from_rational(r: &BigRational) -> Self {
        Class {
            log2: Log2::<T>::from_rational(r).log2(),
            exact: Some(r.clone()),
        }
    }

    fn unit() -> Self {
        Class {
            log2: T::zero(),
            exact: Some(BigRational::one()),
        }
    }
}

pub type StepTable = Vec<Option<u32>>;

/// Level-dependent additive term of a cascade.
#[derive(Clone, Debug)]
pub enum Offset<T> {
    Zero,
    Scaled(T, Box<Offset<T>>),
    Sum(Box<Offset<T>>, Box<Offset<T>>),
    /// Truncated supremum over descendants up to `depth` levels below.
    SupTail {
        inner: Box<Offset<T>>,
        depth: u32,
        /// Best class log available at each step, same layout as the tables.
        step_max_prefix: Vec<T>,
        step_max_period: Vec<T>,
        /// `Some(d)` for the `|log2 Λ|` factor of the `a = 0` case.
        log_volume_dim: Option<usize>,
    },
}

impl<T: Real> Offset<T> {
    pub fn is_zero(&self) -> bool {
        match self {
            Offset::Zero => true,
            Offset::Scaled(_, o) => o.is_zero(),
            Offset::Sum(a, b) => a.is_zero() && b.is_zero(),
            Offset::SupTail { .. } => false,
        }
    }

    pub fn eval(&self, level: u32) -> T {
        self.eval_with(level, None)
    }

    /// Evaluates with every truncation depth replaced by `depth_override`.
    fn eval_with(&self, level: u32, depth_override: Option<u32>) -> T {
        match self {
            Offset::Zero => T::zero(),
            Offset::Scaled(s, o) => {
                let v = o.eval_with(level, depth_override);
                if v == T::neg_infinity() {
                    v
                } else {
                    *s * v
                }
            }
            Offset::Sum(a, b) => {
                a.eval_with(level, depth_override) + b.eval_with(level, depth_override)
            }
            Offset::SupTail {
                inner,
                depth,
                step_max_prefix,
                step_max_period,
                log_volume_dim,
            } => {
                let depth = depth_override.unwrap_or(*depth);
                let mut best = T::neg_infinity();
                let mut run = T::zero();
                for k in 0..=depth {
                    let lvl = level + k;
                    if k > 0 {
                        run = run + periodic_at(step_max_prefix, step_max_period, lvl);
                    }
                    let mut cand = inner.eval_with(lvl, depth_override) + run;
                    if let Some(d) = log_volume_dim {
                        cand = cand + T::lit((lvl as f64 * *d as f64).log2());
                    }
                    if cand > best {
                        best = cand;
                    }
                }
                best
            }
        }
    }

    fn has_sup(&self) -> bool {
        match self {
            Offset::Zero => false,
            Offset::Scaled(_, o) => o.has_sup(),
            Offset::Sum(a, b) => a.has_sup() || b.has_sup(),
            Offset::SupTail { .. } => true,
        }
    }

    /// Difference between the truncation at full depth and one level less,
    /// maximised over truncation depths in the tree.
    pub fn truncation_gap(&self, level: u32) -> T {
        if !self.has_sup() {
            return T::zero();
        }
        let depth = self.min_depth();
        if depth == 0 {
            return T::zero();
        }
        let full = self.eval(level);
        let less = self.eval_with(level, Some(depth - 1));
        (full - less).abs()
    }

    fn min_depth(&self) -> u32 {
        match self {
            Offset::Zero => u32::MAX,
            Offset::Scaled(_, o) => o.min_depth(),
            Offset::Sum(a, b) => a.min_depth().min(b.min_depth()),
            Offset::SupTail { inner, depth, .. } => (*depth).min(inner.min_depth()),
        }
    }
}

fn periodic_at<X: Copy>(prefix: &[X], period: &[X], step: u32) -> X {
    let i = (step - 1) as usize;
    if i < prefix.len() {
        prefix[i]
    } else {
        period[(i - prefix.len()) % period.len()]
    }
}

#[derive(Clone, Debug)]
pub struct Cascade<T> {
    pub dim: usize,
    pub classes: Vec<Class<T>>,
    pub prefix: Vec<StepTable>,
    pub period: Vec<StepTable>,
    pub root: Class<T>,
    pub offset: Offset<T>,
}

/// One group of a level: cubes sharing a class-count vector.
#[derive(Clone, Debug)]
pub struct CountGroup {
    pub counts: Vec<u32>,
    pub mult: BigUint,
}

impl<T: Real> Cascade<T> {
    pub fn self_similar(dim: usize, weights: &[BigRational]) -> Self {
        let mut classes: Vec<Class<T>> = Vec::new();
        let mut table = Vec::with_capacity(weights.len());
        for w in weights {
            if w.is_zero() {
                table.push(None);
                continue;
            }
            let id = match classes.iter().position(|c| c.exact.as_ref() == Some(w)) {
                Some(i) => i,
                None => {
                    classes.push(Class::from_rational(w));
                    classes.len() - 1
                }
            };
            table.push(Some(id as u32));
        }
        Cascade {
            dim,
            classes,
            prefix: Vec::new(),
            period: vec![table],
            root: Class::unit(),
            offset: Offset::Zero,
        }
    }

    pub fn oscillating(dim: usize, prefix: &[u32], period: &[u32]) -> Self {
        let mut values: Vec<u32> = prefix.iter().chain(period).copied().collect();
        values.sort_unstable();
        values.dedup();
        let classes = values
            .iter()
            .map(|&s| Class::from_rational(&BigRational::new(1.into(), s.into())))
            .collect();
        let table = |s: u32| -> StepTable {
            let id = values.iter().position(|&v| v == s).expect("listed") as u32;
            (0..1u32 << dim).map(|c| (c < s).then_some(id)).collect()
        };
        Cascade {
            dim,
            classes,
            prefix: prefix.iter().map(|&s| table(s)).collect(),
            period: period.iter().map(|&s| table(s)).collect(),
            root: Class::unit(),
            offset: Offset::Zero,
        }
    }

    pub fn table(&self, step: u32) -> &StepTable {
        let i = (step - 1) as usize;
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// Whether every step uses the same table.
    pub fn is_step_independent(&self) -> bool {
        self.prefix
            .iter()
            .chain(&self.period)
            .all(|t| t == &self.period[0])
    }

    pub fn is_exact(&self) -> bool {
        self.offset.is_zero()
            && self.root.exact.is_some()
            && self.classes.iter().all(|c| c.exact.is_some())
    }

    /// Class counts along the digit path of `cube`, or `None` if the value is zero.
    pub fn counts(&self, cube: &CubeId) -> Option<Vec<u32>> {
        let mut counts = vec![0u32; self.classes.len()];
        for j in 1..=cube.level {
            let class = self.table(j)[cube.digit(j)]?;
            counts[class as usize] += 1;
        }
        Some(counts)
    }

    /// The one formula used for every cube and every group.
    pub fn log2_from_counts(&self, level: u32, counts: &[u32]) -> T {
        let mut s = T::zero();
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 {
                s = s + T::from_u32(c).expect("count fits") * self.classes[k].log2;
            }
        }
        s + self.root.log2 + self.offset.eval(level)
    }

    pub fn exact_from_counts(&self, counts: &[u32]) -> Option<BigRational> {
        if !self.offset.is_zero() {
            return None;
        }
        let mut v = self.root.exact.clone()?;
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 {
                let e = self.classes[k].exact.as_ref()?;
                v *= rational_pow(e, &BigUint::from(c));
            }
        }
        Some(v)
    }

    pub fn value_log2(&self, cube: &CubeId) -> T {
        match self.counts(cube) {
            Some(c) => self.log2_from_counts(cube.level, &c),
            None => T::neg_infinity(),
        }
    }

    pub fn value_exact(&self, cube: &CubeId) -> Result<BigRational> {
        if !self.is_exact() {
            return Err(Error::ExactUnavailable);
        }
        Ok(match self.counts(cube) {
            Some(c) => self.exact_from_counts(&c).ok_or(Error::ExactUnavailable)?,
            None => BigRational::zero(),
        })
    }

    /// Largest class log available at `step`.
    pub fn step_max(&self, step: u32) -> T {
        self.table(step)
            .iter()
            .flatten()
            .map(|&k| self.classes[k as usize].log2)
            .fold(T::neg_infinity(), T::max)
    }

    /// `log2 max_{Q ∈ D_n} J(Q)`.
    pub fn level_max(&self, level: u32) -> T {
        let mut s = T::zero();
        for j in 1..=level {
            s = s + self.step_max(j);
        }
        s + self.root.log2 + self.offset.eval(level)
    }

    /// Number of child indices in each class at `step`.
    pub fn class_multiplicity(&self, step: u32) -> Vec<u32> {
        let mut m = vec![0u32; self.classes.len()];
        for k in self.table(step).iter().flatten() {
            m[*k as usize] += 1;
        }
        m
    }

    fn map_classes(&mut self, f: impl Fn(&Class<T>) -> Class<T>) {
        for c in &mut self.classes {
            *c = f(c);
        }
    }

    pub fn power(mut self, s: &BigRational) -> Self {
        let st: T = rational_to_real(s);
        let int_exp = integer_exponent(s);
        let pow = |c: &Class<T>| Class {
            log2: c.log2 * st,
            exact: match (&c.exact, &int_exp) {
                (Some(e), Some(k)) => Some(rational_pow(e, k)),
                _ => None,
            },
        };
        self.map_classes(pow);
        self.root = pow(&self.root);
        self.offset = Offset::Scaled(st, Box::new(self.offset));
        self
    }

    pub fn scale(mut self, c: &BigRational) -> Self {
        self.root = Class {
            log2: self.root.log2 + Log2::<T>::from_rational(c).log2(),
            exact: self.root.exact.map(|r| r * c),
        };
        self
    }

    /// `sup { J(Q')^b Λ(Q')^a : Q' ⊂ Q }`, truncated `sup_depth` levels down when `a <= 0`.
    pub fn lambda(mut self, a: &BigRational, b: &BigRational, sup_depth: u32) -> Self {
        let d = self.dim;
        let bt: T = rational_to_real(b);
        let da = a * BigRational::from_integer(d.into());
        let da_t: T = rational_to_real(&da);
        let b_int = integer_exponent(b);
        let da_int = da.is_integer().then(|| da.to_integer());
        let a_zero = a.is_zero();
        let factor = if a_zero {
            Some(BigRational::one())
        } else {
            da_int.as_ref().and_then(|k| {
                let k = k.to_i64()?;
                Some(crate::num::pow2_rational(-k))
            })
        };
        let shift = if a_zero { T::zero() } else { da_t };
        self.map_classes(|c| Class {
            log2: bt * c.log2 - shift,
            exact: match (&c.exact, &b_int, &factor) {
                (Some(e), Some(k), Some(f)) => Some(rational_pow(e, k) * f),
                _ => None,
            },
        });
        self.root = Class {
            log2: bt * self.root.log2,
            exact: match (&self.root.exact, &b_int) {
                (Some(e), Some(k)) => Some(rational_pow(e, k)),
                _ => None,
            },
        };
        let inner = Offset::Scaled(
            bt,
            Box::new(std::mem::replace(&mut self.offset, Offset::Zero)),
        );
        let positive = a > &BigRational::zero();
        let steps = self.prefix.len() + self.period.len();
        let step_max: Vec<T> = (1..=steps as u32).map(|j| self.step_max(j)).collect();
        // With no step able to increase the value and no level term, the
        // supremum sits at the cube itself.
        let sup_at_self = !a_zero && inner.is_zero() && step_max.iter().all(|&m| m <= T::zero());
        self.offset = if positive || sup_at_self {
            inner
        } else {
            Offset::SupTail {
                inner: Box::new(inner),
                depth: sup_depth,
                step_max_prefix: step_max[..self.prefix.len()].to_vec(),
                step_max_period: step_max[self.prefix.len()..].to_vec(),
                log_volume_dim: a_zero.then_some(d),
            }
        };
        if a_zero {
            // `|log2 Λ|` has no exact rational form in general.
            self.map_classes(|c| Class {
                log2: c.log2,
                exact: None,
            });
        }
        self
    }

    pub fn product(left: &Cascade<T>, right: &Cascade<T>) -> Self {
        let nr = right.classes.len();
        let mut classes = Vec::with_capacity(left.classes.len() * nr);
        for l in &left.classes {
            for r in &right.classes {
                classes.push(Class {
                    log2: l.log2 + r.log2,
                    exact: match (&l.exact, &r.exact) {
                        (Some(a), Some(b)) => Some(a * b),
                        _ => None,
                    },
                });
            }
        }
        let plen = left.prefix.len().max(right.prefix.len());
        let qlen = left.period.len().lcm(&right.period.len());
        let dr = right.dim;
        let combine = |step: u32| -> StepTable {
            let (tl, tr) = (left.table(step), right.table(step));
            let mut t = Vec::with_capacity(tl.len() * tr.len());
            for cl in tl {
                for cr in tr {
                    t.push(match (cl, cr) {
                        (Some(a), Some(b)) => Some(*a * nr as u32 + *b),
                        _ => None,
                    });
                }
            }
            debug_assert_eq!(t.len(), 1 << (left.dim + dr));
            t
        };
        let prefix = (1..=plen as u32).map(combine).collect();
        let period = (plen as u32 + 1..=(plen + qlen) as u32)
            .map(combine)
            .collect();
        let mut out = Cascade {
            dim: left.dim + right.dim,
            classes,
            prefix,
            period,
            root: Class {
                log2: left.root.log2 + right.root.log2,
                exact: match (&left.root.exact, &right.root.exact) {
                    (Some(a), Some(b)) => Some(a * b),
                    _ => None,
                },
            },
            offset: Offset::Sum(
                Box::new(left.offset.clone()),
                Box::new(right.offset.clone()),
            ),
        };
        out.dedup_classes();
        out
    }

    /// Merges classes with equal values and drops unused ones.
    pub fn dedup_classes(&mut self) {
        let mut used = vec![false; self.classes.len()];
        for t in self.prefix.iter().chain(&self.period) {
            for k in t.iter().flatten() {
                used[*k as usize] = true;
            }
        }
        let mut kept: Vec<Class<T>> = Vec::new();
        let mut remap = vec![u32::MAX; self.classes.len()];
        for (i, c) in self.classes.iter().enumerate() {
            if !used[i] {
                continue;
            }
            let same = kept.iter().position(|k| match (&k.exact, &c.exact) {
                (Some(a), Some(b)) => a == b,
                (None, None) => {
                    k.log2.to_f64().map(f64::to_bits) == c.log2.to_f64().map(f64::to_bits)
                }
                _ => false,
            });
            remap[i] = match same {
                Some(j) => j as u32,
                None => {
                    kept.push(c.clone());
                    (kept.len() - 1) as u32
                }
            };
        }
        for t in self.prefix.iter_mut().chain(self.period.iter_mut()) {
            for k in t.iter_mut().flatten() {
                *k = remap[*k as usize];
            }
        }
        self.classes = kept;
    }

    /// All class-count vectors of level `n` with their cube counts.
    pub fn level_groups(&self, level: u32, max_groups: usize) -> Result<Vec<CountGroup>> {
        if self.is_step_independent() {
            self.multinomial_groups(level, max_groups)
        } else {
            self.dp_groups(level, max_groups)
        }
    }

    fn multinomial_groups(&self, level: u32, max_groups: usize) -> Result<Vec<CountGroup>> {
        let k = self.classes.len();
        let mult = self.class_multiplicity(1);
        if k == 0 {
            return Ok(if level == 0 {
                vec![CountGroup {
                    counts: Vec::new(),
                    mult: BigUint::one(),
                }]
            } else {
                Vec::new()
            });
        }
        let n = level as usize;
        let expected = binomial_f64(n + k - 1, k - 1);
        if expected > max_groups as f64 {
            return Err(Error::GroupingTooLarge {
                groups: expected.min(usize::MAX as f64) as usize,
                limit: max_groups,
            });
        }
        let binom = pascal(n);
        let powers: Vec<Vec<BigUint>> = mult
            .iter()
            .map(|&c| {
                let mut row = Vec::with_capacity(n + 1);
                let mut p = BigUint::one();
                for _ in 0..=n {
                    row.push(p.clone());
                    p *= c;
                }
                row
            })
            .collect();
        let mut out = Vec::new();
        let mut counts = vec![0u32; k];
        compositions(n, 0, &mut counts, &mut |c| {
            let mut m = BigUint::one();
            let mut rem = n;
            for (i, &ci) in c.iter().enumerate() {
                let ci = ci as usize;
                m *= &binom[rem][ci];
                m *= &powers[i][ci];
                rem -= ci;
            }
            out.push(CountGroup {
                counts: c.to_vec(),
                mult: m,
            });
        });
        Ok(out)
    }

    fn dp_groups(&self, level: u32, max_groups: usize) -> Result<Vec<CountGroup>> {
        let k = self.classes.len();
        let mut cur: HashMap<Vec<u32>, BigUint> = HashMap::new();
        cur.insert(vec![0; k], BigUint::one());
        for j in 1..=level {
            let mult = self.class_multiplicity(j);
            let mut next: HashMap<Vec<u32>, BigUint> = HashMap::with_capacity(cur.len() * 2);
            for (v, m) in &cur {
                for (class, &c) in mult.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let mut w = v.clone();
                    w[class] += 1;
                    *next.entry(w).or_insert_with(BigUint::zero) += m * c;
                }
            }
            if next.len() > max_groups {
                return Err(Error::GroupingTooLarge {
                    groups: next.len(),
                    limit: max_groups,
                });
            }
            cur = next;
        }
        let mut out: Vec<CountGroup> = cur
            .into_iter()
            .map(|(counts, mult)| CountGroup { counts, mult })
            .collect();
        out.sort_by(|a, b| b.counts.cmp(&a.counts));
        Ok(out)
    }
}

fn integer_exponent(s: &BigRational) -> Option<BigUint> {
    (s.is_integer() && s > &BigRational::zero())
        .then(|| s.to_integer().to_biguint().expect("positive"))
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let mut r = 1.0f64;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn pascal(n: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![BigUint::one(); i + 1];
        for j in 1..i {
            row[j] = &rows[i - 1][j - 1] + &rows[i - 1][j];
        }
        rows.push(row);
    }
    rows
}

/// Visits every vector of `counts.len()` nonnegative parts summing to `n`,
/// lexicographically decreasing.
fn compositions(n: usize, i: usize, counts: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
    let k = counts.len();
    if i == k - 1 {
        counts[i] = n as u32;
        visit(counts);
        return;
    }
    for c in (0..=n).rev() {
        counts[i] = c as u32;
        compositions(n - c, i + 1, counts, visit);
    }
    counts[i] = 0;
}

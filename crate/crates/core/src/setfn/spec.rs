//! JSON-facing description of a set function.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{parse_rational, serde_rational, serde_rational_vec};

fn default_sup_depth() -> u32 {
    12
}

/// Eventually periodic sequence: `prefix` once, then `period` forever.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default)]
    pub prefix: Vec<u32>,
    pub period: Vec<u32>,
}

impl Schedule {
    /// Term for step `j >= 1`.
    pub fn at(&self, step: u32) -> u32 {
        let i = (step - 1) as usize;
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }

    /// Blocks of `len` copies of `a` followed by `len` copies of `b`.
    pub fn alternating_blocks(a: u32, b: u32, len: usize) -> Self {
        let mut period = vec![a; len];
        period.extend(std::iter::repeat_n(b, len));
        Schedule {
            prefix: Vec::new(),
            period,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetFunctionSpec {
    /// Self-similar measure on `[0,1)^d` with one weight per child index.
    DyadicSelfSimilar {
        d: usize,
        #[serde(with = "serde_rational_vec")]
        weights: Vec<BigRational>,
    },
    /// Self-similar measure on `[0,1]` for the maps `x -> (x + j)/m`.
    ///
    /// Without `digits`, `weights[j]` belongs to digit `j` and there must be
    /// `m` of them; with `digits`, `weights[i]` belongs to `digits[i]`.
    #[serde(rename = "m-adic-self-similar")]
    MAdicSelfSimilar {
        #[serde(alias = "m")]
        base: u32,
        #[serde(with = "serde_rational_vec")]
        weights: Vec<BigRational>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        digits: Option<Vec<u32>>,
    },
    /// Every surviving cube keeps its first `s_n` children, each with mass `1/s_n`.
    HomogeneousOscillating { d: usize, schedule: Schedule },
    Product {
        left: Box<SetFunctionSpec>,
        right: Box<SetFunctionSpec>,
    },
    Power {
        inner: Box<SetFunctionSpec>,
        #[serde(with = "serde_rational")]
        s: BigRational,
    },
    LambdaWeight {
        inner: Box<SetFunctionSpec>,
        #[serde(with = "serde_rational")]
        a: BigRational,
        #[serde(with = "serde_rational")]
        b: BigRational,
        #[serde(default = "default_sup_depth", alias = "sup-depth")]
        sup_depth: u32,
    },
    /// Constant multiple `c * inner`.
    Scale {
        inner: Box<SetFunctionSpec>,
        #[serde(with = "serde_rational")]
        c: BigRational,
    },
}

fn rationals(ws: &[&str]) -> Vec<BigRational> {
    ws.iter()
        .map(|w| parse_rational(w).expect("valid rational literal"))
        .collect()
}

impl SetFunctionSpec {
    pub fn lebesgue(d: usize) -> Self {
        let n = 1usize << d;
        SetFunctionSpec::DyadicSelfSimilar {
            d,
            weights: vec![BigRational::new(1.into(), n.into()); n],
        }
    }

    /// Dyadic self-similar measure from weight literals such as `"0.2"` or `"1/3"`.
    pub fn dyadic(d: usize, weights: &[&str]) -> Self {
        SetFunctionSpec::DyadicSelfSimilar {
            d,
            weights: rationals(weights),
        }
    }

    pub fn m_adic(base: u32, weights: &[&str]) -> Self {
        SetFunctionSpec::MAdicSelfSimilar {
            base,
            weights: rationals(weights),
            digits: None,
        }
    }

    /// The `(p, 1-p)` measure on the triadic Cantor set.
    pub fn cantor(p: &str) -> Self {
        let p = parse_rational(p).expect("valid rational literal");
        SetFunctionSpec::MAdicSelfSimilar {
            base: 3,
            weights: vec![p.clone(), BigRational::one() - p],
            digits: Some(vec![0, 2]),
        }
    }

    pub fn oscillating(d: usize, schedule: Schedule) -> Self {
        SetFunctionSpec::HomogeneousOscillating { d, schedule }
    }

    pub fn product(self, right: SetFunctionSpec) -> Self {
        SetFunctionSpec::Product {
            left: Box::new(self),
            right: Box::new(right),
        }
    }

    pub fn power(self, s: &str) -> Self {
        SetFunctionSpec::Power {
            inner: Box::new(self),
            s: parse_rational(s).expect("valid rational literal"),
        }
    }

    pub fn lambda(self, a: &str, b: &str) -> Self {
        SetFunctionSpec::LambdaWeight {
            inner: Box::new(self),
            a: parse_rational(a).expect("valid rational literal"),
            b: parse_rational(b).expect("valid rational literal"),
            sup_depth: default_sup_depth(),
        }
    }

    pub fn scale(self, c: &str) -> Self {
        SetFunctionSpec::Scale {
            inner: Box::new(self),
            c: parse_rational(c).expect("valid rational literal"),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SetFunctionSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    pub fn dim(&self) -> usize {
        match self {
            SetFunctionSpec::DyadicSelfSimilar { d, .. }
            | SetFunctionSpec::HomogeneousOscillating { d, .. } => *d,
            SetFunctionSpec::MAdicSelfSimilar { .. } => 1,
            SetFunctionSpec::Product { left, right } => left.dim() + right.dim(),
            SetFunctionSpec::Power { inner, .. }
            | SetFunctionSpec::LambdaWeight { inner, .. }
            | SetFunctionSpec::Scale { inner, .. } => inner.dim(),
        }
    }

    /// Positional weights of an m-adic leaf (gaps filled with zero).
    pub(crate) fn positional_weights(
        base: u32,
        weights: &[BigRational],
        digits: &Option<Vec<u32>>,
    ) -> Vec<BigRational> {
        match digits {
            None => weights.to_vec(),
            Some(ds) => {
                let mut w = vec![BigRational::zero(); base as usize];
                for (d, p) in ds.iter().zip(weights) {
                    w[*d as usize] = p.clone();
                }
                w
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            SetFunctionSpec::DyadicSelfSimilar { d, weights } => {
                if *d == 0 || *d > 16 {
                    return bad(format!("dimension {d} out of range 1..=16"));
                }
                if weights.len() != 1 << d {
                    return bad(format!(
                        "expected {} weights for d={d}, got {}",
                        1 << d,
                        weights.len()
                    ));
                }
                check_probability(weights)
            }
            SetFunctionSpec::MAdicSelfSimilar {
                base,
                weights,
                digits,
            } => {
                if *base < 2 {
                    return bad(format!("base {base} must be at least 2"));
                }
                match digits {
                    None if weights.len() != *base as usize => {
                        return bad(format!("expected {base} weights, got {}", weights.len()))
                    }
                    Some(ds) => {
                        if ds.len() != weights.len() {
                            return bad("digits and weights differ in length".into());
                        }
                        let mut seen = vec![false; *base as usize];
                        for &d in ds {
                            if d >= *base || std::mem::replace(&mut seen[d as usize], true) {
                                return bad(format!("digit {d} repeated or out of range"));
                            }
                        }
                    }
                    None => {}
                }
                check_probability(weights)?;
                if weights.iter().any(|w| w.is_one()) {
                    return bad("a weight of 1 gives a point mass, which is not supported".into());
                }
                Ok(())
            }
            SetFunctionSpec::HomogeneousOscillating { d, schedule } => {
                if *d == 0 || *d > 16 {
                    return bad(format!("dimension {d} out of range 1..=16"));
                }
                if schedule.period.is_empty() {
                    return bad("schedule period must be nonempty".into());
                }
                let max = 1u32 << d;
                if let Some(s) = schedule
                    .prefix
                    .iter()
                    .chain(&schedule.period)
                    .find(|&&s| s == 0 || s > max)
                {
                    return bad(format!("schedule entry {s} outside 1..={max}"));
                }
                Ok(())
            }
            SetFunctionSpec::Product { left, right } => {
                left.validate()?;
                right.validate()?;
                if self.dim() > 16 {
                    return bad("product dimension exceeds 16".into());
                }
                Ok(())
            }
            SetFunctionSpec::Power { inner, s } => {
                if !s.is_positive() {
                    return bad("power exponent s must be positive".into());
                }
                inner.validate()
            }
            SetFunctionSpec::LambdaWeight { inner, b, .. } => {
                if !b.is_positive() {
                    return bad("lambda-weight exponent b must be positive".into());
                }
                inner.validate()
            }
            SetFunctionSpec::Scale { inner, c } => {
                if !c.is_positive() {
                    return bad("scale factor c must be positive".into());
                }
                inner.validate()
            }
        }
    }
}

fn check_probability(weights: &[BigRational]) -> Result<()> {
    if weights.iter().any(|w| w.is_negative()) {
        return Err(Error::InvalidSpec("weights must be nonnegative".into()));
    }
    let total: BigRational = weights.iter().sum();
    if !total.is_one() {
        return Err(Error::InvalidSpec(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let spec = SetFunctionSpec::dyadic(2, &["0.08", "0.2", "0.36", "0.36"]).lambda("-1/2", "1");
        let text = spec.to_json();
        assert_eq!(SetFunctionSpec::from_json(&text).unwrap(), spec);
    }

    #[test]
    fn parses_hand_written_json() {
        let text = r#"{"type": "lambda-weight", "a": 2, "b": "1",
            "inner": {"type": "product",
              "left": {"type": "m-adic-self-similar", "base": 3, "weights": ["0.1", "0.9"], "digits": [0, 2]},
              "right": {"type": "m-adic-self-similar", "base": 3, "weights": [0.1, 0, 0.9]}}}"#;
        let spec = SetFunctionSpec::from_json(text).unwrap();
        assert_eq!(spec.dim(), 2);
        if let SetFunctionSpec::LambdaWeight { sup_depth, .. } = spec {
            assert_eq!(sup_depth, 12);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SetFunctionSpec::from_json(
            r#"{"type":"dyadic-self-similar","d":1,"weights":["0.5","0.6"]}"#
        )
        .is_err());
        assert!(SetFunctionSpec::from_json(
            r#"{"type":"dyadic-self-similar","d":1,"weights":["1/2","1/2"],"x":1}"#
        )
        .is_err());
        assert!(SetFunctionSpec::from_json(
            r#"{"type":"dyadic-self-similar","d":2,"weights":["1/2","1/2"]}"#
        )
        .is_err());
        assert!(SetFunctionSpec::lebesgue(1).power("0").validate().is_err());
        let osc = SetFunctionSpec::oscillating(
            1,
            Schedule {
                prefix: vec![],
                period: vec![3],
            },
        );
        assert!(osc.validate().is_err());
    }

    #[test]
    fn schedule_indexing() {
        let s = Schedule {
            prefix: vec![2],
            period: vec![1, 2, 2],
        };
        let got: Vec<u32> = (1..=7).map(|j| s.at(j)).collect();
        assert_eq!(got, vec![2, 1, 2, 2, 1, 2, 2]);
        let b = Schedule::alternating_blocks(2, 1, 2);
        assert_eq!(b.period, vec![2, 2, 1, 1]);
    }
}

//! Exact rational parsing and serde support.
//!
//! Rationals are written as `"p/q"`, plain decimals (`"0.08"`), or decimals
//! with an exponent (`"1e-7"`). JSON numbers are accepted through their
//! shortest decimal form, so `0.1` reads as exactly `1/10`.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};
use crate::num::{log2_biguint, Real};

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a rational: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer =
        BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    if neg {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let ten = BigInt::from(10u32);
    let r = if scale >= 0 {
        BigRational::from_integer(numer * Pow::pow(&ten, scale as u64))
    } else {
        BigRational::new(numer, Pow::pow(&ten, scale.unsigned_abs()))
    };
    Ok(r)
}

/// Rational → scalar, robust for huge numerators and denominators.
pub fn rational_to_real<T: Real>(r: &BigRational) -> T {
    if r.is_zero() {
        return T::zero();
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let l = log2_biguint(r.numer().magnitude()) - log2_biguint(r.denom().magnitude());
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return T::lit(n / d);
        }
    }
    T::lit(sign * l.exp2())
}

pub fn is_integer(r: &BigRational) -> bool {
    r.denom().is_one()
}

/// Integer power of a rational with a nonnegative exponent.
pub fn rational_pow(r: &BigRational, e: &BigUint) -> BigRational {
    let e = e.to_u64().expect("exponent fits in u64");
    let mut result = BigRational::one();
    let mut base = r.clone();
    let mut k = e;
    while k > 0 {
        if k.is_odd() {
            result *= &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawRational {
    Text(String),
    Int(i64),
    Float(f64),
}

impl RawRational {
    fn into_rational<E: de::Error>(self) -> std::result::Result<BigRational, E> {
        match self {
            RawRational::Text(s) => parse_rational(&s).map_err(E::custom),
            RawRational::Int(i) => Ok(BigRational::from_integer(i.into())),
            RawRational::Float(f) if f.is_finite() => {
                parse_rational(&format!("{f}")).map_err(E::custom)
            }
            RawRational::Float(f) => Err(E::custom(format!("non-finite rational {f}"))),
        }
    }
}

/// serde adapter: `#[serde(with = "crate::rational::serde_rational")]`.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        RawRational::deserialize(d)?.into_rational()
    }
}

/// serde adapter for `Vec<BigRational>`.
pub mod serde_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(
        v: &[BigRational],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<BigRational>, D::Error> {
        Vec::<RawRational>::deserialize(d)?
            .into_iter()
            .map(RawRational::into_rational)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn parses_forms() {
        assert_eq!(parse_rational("1/10").unwrap(), r(1, 10));
        assert_eq!(parse_rational("0.08").unwrap(), r(2, 25));
        assert_eq!(parse_rational("1e-7").unwrap(), r(1, 10_000_000));
        assert_eq!(parse_rational("-1/2").unwrap(), r(-1, 2));
        assert_eq!(parse_rational("2.5E1").unwrap(), r(25, 1));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn json_numbers_are_exact_decimals() {
        #[derive(Deserialize)]
        struct W {
            #[serde(with = "serde_rational")]
            x: BigRational,
        }
        let w: W = serde_json::from_str(r#"{"x": 0.1}"#).unwrap();
        assert_eq!(w.x, r(1, 10));
        let w: W = serde_json::from_str(r#"{"x": "3/7"}"#).unwrap();
        assert_eq!(w.x, r(3, 7));
        let w: W = serde_json::from_str(r#"{"x": 2}"#).unwrap();
        assert_eq!(w.x, r(2, 1));
    }

    #[test]
    fn conversion_to_real() {
        assert_eq!(rational_to_real::<f64>(&r(1, 4)), 0.25);
        let tiny = BigRational::new(1.into(), BigInt::from(10u32).pow(400u32));
        let v: f64 = rational_to_real(&tiny);
        assert_eq!(v, 0.0);
        assert_eq!(rational_pow(&r(2, 3), &BigUint::from(3u32)), r(8, 27));
    }
}

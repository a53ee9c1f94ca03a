//! Parsers for level ranges, real grids and budget lists.

use std::num::ParseIntError;

fn split_items(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// `1..50` and `1..=50` are inclusive, `10..200:10` steps, `1,2,5` lists.
pub fn parse_levels(s: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for item in split_items(s) {
        if let Some((range, step)) = split_range(item) {
            let (a, b) = range;
            let a: u32 = a
                .parse()
                .map_err(|e: ParseIntError| format!("{item}: {e}"))?;
            let b: u32 = b
                .parse()
                .map_err(|e: ParseIntError| format!("{item}: {e}"))?;
            let step: u32 = match step {
                Some(st) => st
                    .parse()
                    .map_err(|e: ParseIntError| format!("{item}: {e}"))?,
                None => 1,
            };
            if step == 0 || b < a {
                return Err(format!("{item}: empty or descending range"));
            }
            out.extend((a..=b).step_by(step as usize));
        } else {
            out.push(
                item.parse()
                    .map_err(|e: ParseIntError| format!("{item}: {e}"))?,
            );
        }
    }
    check_increasing(&out, s)?;
    if out.first() == Some(&0) {
        return Err("levels start at 1".into());
    }
    Ok(out)
}

/// `a..b`, `a..=b`, optionally followed by `:step`.
fn split_range(item: &str) -> Option<((&str, &str), Option<&str>)> {
    let (range, step) = match item.split_once(':') {
        Some((r, s)) => (r, Some(s)),
        None => (item, None),
    };
    let (a, b) = range.split_once("..")?;
    Some((
        (a.trim(), b.trim_start_matches('=').trim()),
        step.map(str::trim),
    ))
}

/// `start:stop:step` (inclusive) or a comma list.
pub fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in split_items(s) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{item}: {e}"));
        match parts.as_slice() {
            [x] => out.push(num(x)?),
            [a, b, st] => {
                let (a, b, st) = (num(a)?, num(b)?, num(st)?);
                if !(st > 0.0) || b < a {
                    return Err(format!("{item}: need start <= stop and step > 0"));
                }
                let n = ((b - a) / st + 1e-9).floor() as usize;
                if n > 1_000_000 {
                    return Err(format!("{item}: too many grid points"));
                }
                out.extend((0..=n).map(|i| a + i as f64 * st));
            }
            _ => return Err(format!("{item}: expected start:stop:step")),
        }
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(format!("{s}: values must be finite"));
    }
    check_increasing(&out, s)?;
    Ok(out)
}

/// `2..64`, `2^3..2^16` (powers of two), or a list such as `8,2^10,5000`.
pub fn parse_budgets(s: &str) -> Result<Vec<u64>, String> {
    let one = |t: &str| -> Result<u64, String> {
        match t.split_once('^') {
            Some(("2", k)) => {
                let k: u32 = k.parse().map_err(|e: ParseIntError| format!("{t}: {e}"))?;
                1u64.checked_shl(k)
                    .filter(|_| k < 63)
                    .ok_or_else(|| format!("{t}: too large"))
            }
            Some(_) => Err(format!("{t}: only powers of 2 are supported")),
            None => t.parse().map_err(|e: ParseIntError| format!("{t}: {e}")),
        }
    };
    let mut out = Vec::new();
    for item in split_items(s) {
        if let Some(((a, b), step)) = split_range(item) {
            if step.is_some() {
                return Err(format!("{item}: budget ranges take no step"));
            }
            if a.contains('^') && b.contains('^') {
                let (x, y) = (one(a)?, one(b)?);
                let mut v = x;
                while v <= y {
                    out.push(v);
                    v *= 2;
                }
            } else {
                let (x, y) = (one(a)?, one(b)?);
                if y.saturating_sub(x) > 1_000_000 {
                    return Err(format!("{item}: range too long"));
                }
                out.extend(x..=y);
            }
        } else {
            out.push(one(item)?);
        }
    }
    if out.first() == Some(&0) {
        return Err("budgets start at 1".into());
    }
    check_increasing(&out, s)?;
    Ok(out)
}

fn check_increasing<T: PartialOrd>(v: &[T], s: &str) -> Result<(), String> {
    if v.is_empty() {
        return Err(format!("{s:?} is empty"));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("{s:?} must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels() {
        assert_eq!(parse_levels("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(
            parse_levels("1..=3,10..20:5").unwrap(),
            vec![1, 2, 3, 10, 15, 20]
        );
        assert!(parse_levels("0..3").is_err());
        assert!(parse_levels("3,2").is_err());
    }

    #[test]
    fn reals() {
        assert_eq!(
            parse_reals("0:1:0.25").unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(parse_reals("-1,0.5").unwrap(), vec![-1.0, 0.5]);
        assert!(parse_reals("1:0:0.1").is_err());
    }

    #[test]
    fn budgets() {
        assert_eq!(parse_budgets("2^3..2^5").unwrap(), vec![8, 16, 32]);
        assert_eq!(parse_budgets("2..4,2^4").unwrap(), vec![2, 3, 4, 16]);
        assert!(parse_budgets("3^2").is_err());
    }
}

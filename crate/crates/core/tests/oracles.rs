//! Closed forms and exhaustive oracles.

use num_rational::BigRational;
use num_traits::One;

use pelab::num::pow2_rational;
use pelab::partition::{
    adaptive_partition, brute_force_min_partition, brute_min_max, count_good, dual_table,
    enumerate_partitions, OracleValue,
};
use pelab::spectra::{coarse_count, critical_exponents, minkowski_estimate, q_zero, tau_n};
use pelab::{Evaluator, GridScheme, SetFunctionSpec, Threshold};

fn eval(spec: &SetFunctionSpec) -> Evaluator<f64> {
    Evaluator::new(spec).unwrap()
}

#[test]
fn partition_counts_follow_the_recursion() {
    // a(m) = a(m-1)^(2^d) + 1
    let d1: Vec<usize> = (0..=4)
        .map(|m| enumerate_partitions(1, m).unwrap().len())
        .collect();
    assert_eq!(d1, vec![1, 2, 5, 26, 677]);
    let d2: Vec<usize> = (0..=2)
        .map(|m| enumerate_partitions(2, m).unwrap().len())
        .collect();
    assert_eq!(d2, vec![1, 2, 17]);
}

#[test]
fn self_similar_tau_is_level_independent() {
    let cases: Vec<(SetFunctionSpec, Vec<f64>, f64)> = vec![
        (
            SetFunctionSpec::dyadic(1, &["0.3", "0.7"]),
            vec![0.3, 0.7],
            0.0,
        ),
        (
            SetFunctionSpec::dyadic(1, &["0.2", "0.8"]),
            vec![0.2, 0.8],
            0.0,
        ),
        (
            SetFunctionSpec::dyadic(2, &["0.08", "0.2", "0.36", "0.36"]).lambda("-1/2", "1"),
            vec![0.08, 0.2, 0.36, 0.36],
            1.0,
        ),
    ];
    for (spec, w, shift) in cases {
        let e = eval(&spec);
        let g = GridScheme::classical(e.dim());
        for n in [1u32, 5, 17, 60] {
            for i in 0..=12 {
                let q = i as f64 * 0.25;
                let want = w.iter().map(|x: &f64| x.powf(q)).sum::<f64>().log2() + shift * q;
                let got = tau_n(&e, &g, n, q).unwrap();
                assert!((got - want).abs() < 1e-12, "n={n} q={q}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn power_moves_the_zero_to_one_over_s() {
    for (s, want) in [("1", 1.0), ("2", 0.5), ("3", 1.0 / 3.0), ("5/2", 0.4)] {
        let e = eval(&SetFunctionSpec::dyadic(1, &["0.3", "0.7"]).power(s));
        let q = q_zero(&e, &GridScheme::classical(1), 30, 1e-13).unwrap();
        assert!((q - want).abs() < 1e-9, "s={s}: {q}");
    }
}

#[test]
fn infinity_dimension_of_binomial() {
    let e = eval(&SetFunctionSpec::dyadic(1, &["0.2", "0.8"]));
    let levels: Vec<u32> = (1..=30).collect();
    let ce = critical_exponents(&e, &GridScheme::classical(1), &levels, &[]).unwrap();
    assert!((ce.dim_inf - (-(0.8f64).log2())).abs() < 1e-12);
}

#[test]
fn lebesgue_coarse_counts_and_box_dimension() {
    for d in 1..=2usize {
        let e = eval(&SetFunctionSpec::lebesgue(d));
        let g = GridScheme::classical(d);
        for n in 1..=10u32 {
            let below = coarse_count(&e, &g, n, d as f64 - 0.01).unwrap();
            let at = coarse_count(&e, &g, n, d as f64).unwrap();
            assert_eq!(below, 0u32.into());
            assert_eq!(at, num_bigint::BigUint::one() << (d as u32 * n));
        }
        let levels: Vec<u32> = (1..=12).collect();
        let m = minkowski_estimate(&e, &g, &levels).unwrap();
        assert!((m.estimate() - d as f64).abs() < 1e-12);
    }
}

#[test]
fn lebesgue_gamma_is_a_power_of_two() {
    let e = eval(&SetFunctionSpec::lebesgue(1));
    let budgets: Vec<u64> = (2..=64).collect();
    let t = dual_table(&e, &GridScheme::classical(1), &budgets).unwrap();
    for row in &t.rows {
        let k = 63 - row.budget.leading_zeros() as i64;
        assert_eq!(row.gamma_exact, Some(pow2_rational(-k)), "n={}", row.budget);
    }
}

#[test]
fn cantor_leaf_matches_exhaustive_search() {
    let e = eval(&SetFunctionSpec::cantor("0.1"));
    let g = GridScheme::classical(1);
    for t in ["1/2", "1/5", "1/10", "1/20", "1/40", "0.09"] {
        let t = Threshold::<f64>::parse(t).unwrap();
        let adaptive = adaptive_partition(&e, &g, &t).unwrap();
        if adaptive.histogram.keys().max().copied().unwrap_or(0) > 8 {
            continue;
        }
        let (brute, _) = brute_force_min_partition(&e, &t, 8).unwrap();
        assert_eq!(adaptive.count(), brute);
        assert_eq!(count_good(&e, &g, &t).unwrap(), (brute as u64).into());
    }
}

#[test]
fn weighted_product_matches_exhaustive_search() {
    let spec = SetFunctionSpec::cantor("0.1")
        .product(SetFunctionSpec::cantor("0.1"))
        .lambda("2", "1");
    let e = eval(&spec);
    let g = GridScheme::classical(2);
    let mut compared = 0;
    for k in 1..=12 {
        let t = Threshold::<f64>::pow2(-k);
        let adaptive = adaptive_partition(&e, &g, &t).unwrap();
        if adaptive.histogram.keys().max().copied().unwrap_or(0) > 4 {
            break;
        }
        let (brute, _) = brute_force_min_partition(&e, &t, 4).unwrap();
        assert_eq!(adaptive.count(), brute, "t=2^-{k}");
        compared += 1;
    }
    assert!(compared >= 3);
}

#[test]
fn dual_matches_min_max_on_binomial() {
    let e = eval(&SetFunctionSpec::dyadic(1, &["1/3", "2/3"]));
    let g = GridScheme::classical(1);
    let budgets: Vec<u64> = (2..=32).collect();
    let table = dual_table(&e, &g, &budgets).unwrap();
    let oracle = brute_min_max(&e, 12, 32).unwrap();
    let mut compared = 0;
    for row in table.rows.iter().filter(|r| r.depth <= 12) {
        match &oracle[row.budget as usize - 1].value {
            Some(OracleValue::Exact(v)) => {
                assert_eq!(row.gamma_exact.as_ref(), Some(v), "n={}", row.budget)
            }
            other => panic!("{other:?}"),
        }
        compared += 1;
    }
    assert!(compared >= 20);
}

#[test]
fn exact_threshold_ties_are_strict() {
    // J(Q) = 1/2 at level 1: t = 1/2 must split those cubes.
    let e = eval(&SetFunctionSpec::lebesgue(1));
    let g = GridScheme::classical(1);
    let half = Threshold::<f64>::from_rational(BigRational::new(1.into(), 2.into())).unwrap();
    assert_eq!(adaptive_partition(&e, &g, &half).unwrap().count(), 4);
    let above = Threshold::<f64>::parse("0.5000001").unwrap();
    assert_eq!(adaptive_partition(&e, &g, &above).unwrap().count(), 2);
}

#![allow(clippy::excessive_precision)]

use bivex::oracle::{
    error_term_cases, exact_max_tail_checked, laplace_prefactor_limit, large_scale_gap, sharp_ratio_detailed, Branch,
};
use bivex::rate::KRow;
use bivex::{
    bvn_upper_tail, error_term_bound, essinf_qp, exact_max_tail, exists_single_index_tail, laplace_prefactor_check,
    rate_i, regime_classify, std_normal_tail, union_sum, CorrelationStructure, Error, Regime, SampleSize, Scale,
    ScalingSequence, Threshold,
};
use proptest::prelude::*;

enum N {
    Int(u64),
    Log(f64),
}

/// `ln P(max X⁽¹⁾ > v1, max X⁽²⁾ > v2)` at 50 significant digits.
const TAIL_REFERENCE: [(N, f64, f64, f64, f64); 10] = [
    (N::Int(1000), 4.0, 4.3, 0.5, -7.701218662520812172),
    (N::Int(10), 3.0, 3.2, 0.3, -8.421632002636437949),
    (N::Int(100), 1.5, 1.5, 0.5, -0.001984043087908439231),
    (N::Int(1000), 10.0, 10.0, 0.5, -65.28951189255681598),
    (N::Int(1000), 16.0, 8.0, -0.5, -152.8943231760438560),
    (N::Int(50), 3.4, 3.5, -0.6, -8.571515128648074251),
    (N::Log(46.0), 13.564659966250536, 10.173494974687902, 0.0, -58.52999429127183600),
    (N::Log(46.0), 10.851727973000429, 10.851727973000429, 0.9, -20.60787830626525138),
    (N::Int(2), 0.3, 0.8, -0.4, -1.635589225473145767),
    (N::Int(1_000_000), 5.0, 4.5, 0.0, -1.423415225844064789),
];

fn size(n: &N) -> SampleSize {
    match *n {
        N::Int(k) => SampleSize::new(k).unwrap(),
        N::Log(l) => SampleSize::from_log(l).unwrap(),
    }
}

fn rel_prob(got: f64, want: f64) -> f64 {
    (got - want).exp_m1().abs()
}

#[test]
fn exact_tail_matches_extended_precision() {
    for (n, v1, v2, rho, want) in TAIL_REFERENCE {
        let got = exact_max_tail(size(&n), Threshold::new(v1, v2), rho).unwrap().ln();
        let tol = if v1.max(v2) > 12.0 { 1e-6 } else { 1e-9 };
        assert!(rel_prob(got, want) < tol, "({v1}, {v2}, {rho}): {got} vs {want}");
    }
}

#[test]
fn single_sample_is_the_orthant() {
    let v = Threshold::new(2.3, 1.1);
    let t = exact_max_tail(SampleSize::new(1).unwrap(), v, -0.3).unwrap();
    assert_eq!(t, bvn_upper_tail(2.3, 1.1, -0.3).unwrap());
    let e = exists_single_index_tail(SampleSize::new(1).unwrap(), v, -0.3).unwrap();
    assert_eq!(e, bvn_upper_tail(2.3, 1.1, -0.3).unwrap());
}

#[test]
fn independence_factorizes() {
    let n = 100.0;
    let q = std_normal_tail(1.5).prob();
    let m = 1.0 - (1.0 - q).powf(n);
    let want = 1.0 - 2.0 * (1.0 - q).powf(n) + ((1.0 - q) * (1.0 - q)).powf(n);
    assert!((m * m / want - 1.0).abs() < 1e-12);
    let got = exact_max_tail(SampleSize::new(100).unwrap(), Threshold::new(1.5, 1.5), 0.0).unwrap().prob();
    assert!((got / want - 1.0).abs() < 1e-10);

    for &(v1, v2, k) in &[(4.0, 3.0, 1000u64), (9.0, 7.5, 10_000), (2.0, 0.5, 3)] {
        let n = SampleSize::new(k).unwrap();
        let lhs = exact_max_tail(n, Threshold::new(v1, v2), 0.0).unwrap().ln();
        let marg = |v: f64| bivex::logspace::log1m_pow_complement(n.log_n(), std_normal_tail(v).ln());
        assert!(rel_prob(lhs, marg(v1) + marg(v2)) < 1e-10, "({v1}, {v2}, {k})");
    }
}

#[test]
fn perfectly_correlated_is_one_dimensional() {
    let n = SampleSize::new(500).unwrap();
    let got = exact_max_tail(n, Threshold::new(3.5, 2.0), 1.0).unwrap().ln();
    let want = bivex::logspace::log1m_pow_complement(n.log_n(), std_normal_tail(3.5).ln());
    assert!(rel_prob(got, want) < 1e-12);
}

#[test]
fn branches_agree_in_crossover() {
    // n·s_small sweeps through the switch band
    for v in [3.0, 3.5, 4.0, 4.5, 5.0] {
        let t = exact_max_tail_checked(SampleSize::new(100).unwrap(), Threshold::new(v, v), 0.4).unwrap();
        if let Some(gap) = t.branch_gap {
            assert!(gap < 1e-6, "v = {v}: gap {gap}");
        }
        assert!(!t.precision_loss);
    }
    let deep = exact_max_tail_checked(SampleSize::new(100).unwrap(), Threshold::new(9.0, 9.0), 0.4).unwrap();
    assert_eq!(deep.branch, Branch::Series);
}

#[test]
fn exact_tail_input_errors() {
    let n = SampleSize::new(10).unwrap();
    assert!(matches!(exact_max_tail(n, Threshold::new(f64::NAN, 1.0), 0.0), Err(Error::NanInput)));
    assert!(exact_max_tail(n, Threshold::new(1.0, 1.0), 1.01).is_err());
    assert!(SampleSize::new(0).is_err());
    assert!(SampleSize::from_log(-1.0).is_err());
}

#[test]
fn exists_single_first_order() {
    let n = SampleSize::new(1000).unwrap();
    let v = Threshold::new(7.0, 7.0);
    let e = exists_single_index_tail(n, v, 0.2).unwrap().ln();
    let first = n.log_n() + bvn_upper_tail(7.0, 7.0, 0.2).unwrap().ln();
    assert!((e - first).abs() < 1e-8);
    // n·q12 far below underflow
    let n = SampleSize::from_log(46.0).unwrap();
    let e = exists_single_index_tail(n, Threshold::new(40.0, 40.0), 0.5).unwrap().ln();
    let first = 46.0 + bvn_upper_tail(40.0, 40.0, 0.5).unwrap().ln();
    assert!(e.is_finite() && (e - first).abs() < 1e-8);
}

/// The single-index rate converges slowly: the gap to `1 − essinf` at
/// `n = 10²⁰` is about 0.13, above the 0.1 band quoted for this example.
/// The gap does shrink with `log n` at the expected `log(log n)/log n` pace.
#[test]
fn exists_single_rate_converges_slowly() {
    let rho = 0.5;
    let target =
        1.0 - essinf_qp(Threshold::new(2.0, 2.0), &CorrelationStructure::standard(rho).unwrap()).unwrap().value;
    assert!((target - (1.0 - 8.0 / 3.0)).abs() < 1e-15);
    let gap = |log_n: f64| {
        let n = SampleSize::from_log(log_n).unwrap();
        let v = Threshold::new(2.0, 2.0).scaled(log_n.sqrt());
        (exists_single_index_tail(n, v, rho).unwrap().ln() / log_n - target).abs()
    };
    let g20 = gap(20.0 * std::f64::consts::LN_10);
    assert!(g20 > 0.1 && g20 < 0.16, "gap {g20}");
    let (g100, g1000) = (gap(100.0), gap(1000.0));
    assert!(g100 < g20 && g1000 < g100 && g1000 < 0.1);
}

#[test]
fn union_sum_examples() {
    let n = SampleSize::new(1000).unwrap();
    let s = ScalingSequence::large(n, 6.0).unwrap();

    let d = union_sum(&s, Threshold::new(2.0, 1.0), 0.0).unwrap();
    let want = (1000.0f64 * 999.0).ln() + std_normal_tail(12.0).ln() + std_normal_tail(6.0).ln();
    assert!((d.log_s_unequal - want).abs() < 1e-12);

    let d = union_sum(&s, Threshold::new(2.0, 2.0), 0.5).unwrap();
    let union = d.log_union();
    assert!(((d.log_t.ln() - union) / union).abs() < 0.05);
    assert!(d.log_e_n < d.log_s_equal - 10.0);
    assert_eq!(d.dominant(), Regime::OneIndexDominant);
    // both orientations of each pair are counted
    let want = (1000.0f64 * 999.0).ln() + 2.0 * std_normal_tail(12.0).ln();
    assert!((d.log_s_unequal - want).abs() < 1e-12);

    assert!(matches!(union_sum(&s, Threshold::new(1.0, 2.0), 0.5), Err(Error::UnsortedThreshold { .. })));
}

#[test]
fn error_term_cases_are_exhaustive() {
    let s = ScalingSequence::explicit(SampleSize::new(1000).unwrap(), 6.0).unwrap();
    let cases = error_term_cases(&s, Threshold::new(2.0, 1.5), 0.3).unwrap();
    assert_eq!(cases.len(), 13);
    let four = cases.iter().find(|c| c.blocks == 4).unwrap();
    let (q1, q2) = (std_normal_tail(12.0).ln(), std_normal_tail(9.0).ln());
    let count = (1000.0f64 * 999.0 * 998.0 * 997.0 / 2.0).ln();
    assert!((four.log_term - (count + 2.0 * (q1 + q2))).abs() < 1e-10);
    assert!(cases.iter().all(|c| c.blocks >= 2));

    let one = ScalingSequence::explicit(SampleSize::new(1).unwrap(), 3.0).unwrap();
    assert!(error_term_bound(&one, Threshold::new(1.0, 1.0), 0.2).unwrap().is_zero());
}

/// Second Bonferroni sum against a direct count on tiny `n`.
#[test]
fn error_term_matches_enumeration() {
    let (q1, q2) = (std_normal_tail(2.0).prob(), std_normal_tail(1.5).prob());
    let q12 = bvn_upper_tail(2.0, 1.5, 0.4).unwrap().prob();
    for n in 2..=6usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        let mut e = 0.0;
        for a in 0..pairs.len() {
            for b in a + 1..pairs.len() {
                let (first, second) = ([pairs[a].0, pairs[b].0], [pairs[a].1, pairs[b].1]);
                let mut p = 1.0;
                for s in 0..n {
                    let need1 = first.contains(&s);
                    let need2 = second.contains(&s);
                    p *= match (need1, need2) {
                        (true, true) => q12,
                        (true, false) => q1,
                        (false, true) => q2,
                        _ => 1.0,
                    };
                }
                e += p;
            }
        }
        let s = ScalingSequence::explicit(SampleSize::new(n as u64).unwrap(), 1.0).unwrap();
        let got = error_term_bound(&s, Threshold::new(2.0, 1.5), 0.4).unwrap().ln();
        assert!(rel_prob(got, e.ln()) < 1e-12, "n = {n}: {got} vs {}", e.ln());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bonferroni_sandwich(
        k in 1u64..5000,
        a in 1.0..10.0f64,
        u1 in 0.3..3.0f64,
        f in 0.1..1.0f64,
        rho in -0.9..0.9f64,
    ) {
        let s = ScalingSequence::explicit(SampleSize::new(k).unwrap(), a).unwrap();
        let d = union_sum(&s, Threshold::new(u1, u1 * f), rho).unwrap();
        let t = d.log_t.ln();
        prop_assert!(t <= d.log_union() + 1e-9 * d.log_union().abs().max(1.0));
        let lower = d.log_lower();
        prop_assert!(lower <= t + 1e-9 * t.abs().max(1.0), "lower {lower} > T {t}");
    }

    #[test]
    fn exact_tail_is_monotone(k in 1u64..100_000, v in -2.0..8.0f64, d in 0.0..2.0f64, rho in -0.95..0.95f64) {
        let n = SampleSize::new(k).unwrap();
        let a = exact_max_tail(n, Threshold::new(v, v * 0.8), rho).unwrap().ln();
        let b = exact_max_tail(n, Threshold::new(v + d, v * 0.8), rho).unwrap().ln();
        prop_assert!(b <= a + 1e-12 * a.abs().max(1.0));
        let more = exact_max_tail(SampleSize::new(k + 1).unwrap(), Threshold::new(v, v * 0.8), rho).unwrap().ln();
        prop_assert!(more >= a - 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn laplace_prefactor_approaches_limit() {
    for (rho, u) in [(0.5, Threshold::new(2.0, 2.0)), (0.0, Threshold::new(2.0, 1.0)), (0.3, Threshold::new(1.5, 1.2))]
    {
        let limit = laplace_prefactor_limit(u, rho);
        let at = |a: f64| laplace_prefactor_check(a, u, rho).unwrap();
        let (g1, g2) = ((at(10.0) / limit - 1.0).abs(), (at(20.0) / limit - 1.0).abs());
        assert!(g2 < 0.05, "rho {rho}: {g2}");
        // error is O(1/a²)
        assert!((g1 / g2 - 4.0).abs() < 0.6, "rho {rho}: ratio {}", g1 / g2);
    }
    assert!(matches!(laplace_prefactor_check(5.0, Threshold::new(2.0, 0.5), 0.5), Err(Error::RegimeViolation(_))));
}

#[test]
fn sharp_ratio_tends_to_constant() {
    let n = SampleSize::new(1000).unwrap();
    for (rho, u) in [(0.5, Threshold::new(2.0, 2.0)), (-0.5, Threshold::new(2.0, 1.0)), (0.5, Threshold::new(2.0, 0.5))]
    {
        let r = |a: f64| sharp_ratio_detailed(&ScalingSequence::large(n, a).unwrap(), u, rho).unwrap();
        let (lo, hi) = (r(20.0), r(60.0));
        let k = hi.constants.k;
        assert!((hi.ratio / k - 1.0).abs() < (lo.ratio / k - 1.0).abs());
        assert!((hi.ratio / k - 1.0).abs() < 0.02, "rho {rho}: {} vs {k}", hi.ratio);
    }
    let sym = sharp_ratio_detailed(&ScalingSequence::large(n, 60.0).unwrap(), Threshold::new(2.0, 2.0), -0.5).unwrap();
    assert_eq!(sym.constants.row, KRow::TwoIndexSymmetric);
    assert!((sym.ratio / sym.constants.k - 1.0).abs() < 0.02);
}

#[test]
fn large_scale_regime_matches_dominant_sum() {
    let n = SampleSize::new(1000).unwrap();
    let s = ScalingSequence::large(n, 30.0).unwrap();
    for rho in [-0.5, 0.5, 0.8] {
        for u in [Threshold::new(2.0, 1.0), Threshold::new(2.0, 2.0), Threshold::new(1.5, 1.2)] {
            let regime = regime_classify(u, &CorrelationStructure::standard(rho).unwrap(), Scale::Large).unwrap();
            let d = union_sum(&s, u, rho).unwrap();
            let i = rate_i(u, rho).unwrap();
            if !i.case_label.is_cone() {
                assert_eq!(d.dominant(), regime, "rho {rho} u {u:?}");
            }
        }
    }
}

#[test]
fn large_scale_gap_shrinks() {
    let n = SampleSize::new(1000).unwrap();
    let gap = |a: f64| large_scale_gap(&ScalingSequence::large(n, a).unwrap(), Threshold::new(2.0, 1.0), -0.5).unwrap();
    let (g10, g20, g40) = (gap(10.0).abs(), gap(20.0).abs(), gap(40.0).abs());
    assert!(g40 < g20 && g20 < g10);
    assert!(g40 < 0.01);
}

#[test]
fn scaling_validation() {
    let n = SampleSize::new(1000).unwrap();
    assert!(matches!(ScalingSequence::large(n, 2.0), Err(Error::InvalidScaling(_))));
    assert!(ScalingSequence::explicit(n, f64::NAN).is_err());
    let r = ScalingSequence::right(n);
    assert_eq!(r.a_n, n.log_n().sqrt());
}

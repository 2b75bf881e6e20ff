#![allow(clippy::excessive_precision)]

use bivex::gaussian::ln_std_normal_tail;
use bivex::monte_carlo::Warning;
use bivex::quadrature::integrate;
use bivex::rng::StreamFactory;
use bivex::{
    estimate_tail_is, estimate_tail_naive, exact_max_tail, index_coincidence, sample_componentwise_max, Error,
    McSettings, Method, SampleSize, Threshold,
};

fn exact(n: u64, v: Threshold, rho: f64) -> f64 {
    exact_max_tail(SampleSize::new(n).unwrap(), v, rho).unwrap().ln()
}

#[test]
fn naive_matches_exact() {
    let v = Threshold::new(2.0, 2.0);
    let e = estimate_tail_naive(10, v, 0.3, McSettings::new(40_000, 1)).unwrap();
    assert_eq!(e.method, Method::Naive);
    assert!(e.z_score(exact(10, v, 0.3)).abs() < 4.0, "z = {}", e.z_score(exact(10, v, 0.3)));
}

/// At `n = 10⁴`, `v = (2, 2)` the event is almost sure (`1 − T ≈ e⁻²²⁰`), so
/// every naive trial hits and the estimate is exactly `log 1`.
#[test]
fn naive_saturates_where_exact_is_one() {
    let v = Threshold::new(2.0, 2.0);
    let t = exact(10_000, v, 0.5);
    assert!(t > -1e-90 && t <= 0.0);
    let e = estimate_tail_naive(10_000, v, 0.5, McSettings::new(300, 4)).unwrap();
    assert_eq!(e.hits, 300);
    assert_eq!(e.log_p.ln(), 0.0);
}

#[test]
fn two_seeds_agree() {
    let v = Threshold::new(3.0, 2.5);
    let a = estimate_tail_naive(20, v, -0.2, McSettings::new(30_000, 10)).unwrap();
    let b = estimate_tail_naive(20, v, -0.2, McSettings::new(30_000, 11)).unwrap();
    assert_ne!(a.hits, b.hits);
    let spread = (a.std_err_log.powi(2) + b.std_err_log.powi(2)).sqrt();
    assert!((a.log_p.ln() - b.log_p.ln()).abs() < 4.0 * spread);
}

#[test]
fn importance_sampling_deep_tail() {
    let v = Threshold::new(10.0, 10.0);
    let want = -65.28951189255681598;
    let e = estimate_tail_is(1000, v, 0.5, McSettings::new(4000, 2)).unwrap();
    assert_eq!(e.method, Method::ImportanceSampling);
    // relative variance per trial grows like the squared shift length (~130 here)
    assert!(e.std_err_log < 0.25, "se {}", e.std_err_log);
    assert!(e.z_score(want).abs() < 4.0, "z = {}", e.z_score(want));
    assert!(e.ess >= 30.0 && e.warning.is_none());
}

#[test]
fn importance_sampling_two_index_regime() {
    // negative correlation: two different samples dominate
    let v = Threshold::new(8.0, 6.0);
    let e = estimate_tail_is(500, v, -0.5, McSettings::new(4000, 3)).unwrap();
    assert!(e.z_score(exact(500, v, -0.5)).abs() < 4.0);
    assert!(e.std_err_log < 0.25, "se {}", e.std_err_log);
}

/// Standardized errors over 50 points: no bias, calibrated spread.
#[test]
fn importance_sampling_is_calibrated() {
    let mut zs = Vec::new();
    for (i, a) in [3.0, 4.0, 5.0, 6.0, 7.0].into_iter().enumerate() {
        for (j, rho) in [-0.5, 0.0, 0.3, 0.5, 0.8].into_iter().enumerate() {
            for (k, (u1, u2)) in [(1.0, 1.0), (1.2, 0.9)].into_iter().enumerate() {
                let v = Threshold::new(a * u1, a * u2);
                let seed = 1000 + (i * 10 + j * 2 + k) as u64;
                let e = estimate_tail_is(100, v, rho, McSettings::new(2000, seed)).unwrap();
                zs.push(e.z_score(exact(100, v, rho)));
            }
        }
    }
    assert_eq!(zs.len(), 50);
    let m = zs.iter().sum::<f64>() / 50.0;
    let var = zs.iter().map(|z| (z - m).powi(2)).sum::<f64>() / 49.0;
    assert!(m.abs() < 0.5, "mean z {m}");
    assert!((0.5..=2.0).contains(&var), "var z {var}");
}

#[test]
fn results_do_not_depend_on_workers() {
    let v = Threshold::new(4.0, 3.5);
    for method in [estimate_tail_is, estimate_tail_naive] {
        let one = method(50, v, 0.4, McSettings::new(3000, 77).with_workers(1)).unwrap();
        let many = method(50, v, 0.4, McSettings::new(3000, 77).with_workers(4)).unwrap();
        assert_eq!(one.log_p.ln().to_bits(), many.log_p.ln().to_bits());
        assert_eq!(one.std_err_log.to_bits(), many.std_err_log.to_bits());
        assert_eq!(one.hits, many.hits);
    }
    let u = Threshold::new(1.6, 1.6);
    let a = index_coincidence(1000, 1000f64.ln().sqrt(), u, 0.0, McSettings::new(500, 5).with_workers(1)).unwrap();
    let b = index_coincidence(1000, 1000f64.ln().sqrt(), u, 0.0, McSettings::new(500, 5).with_workers(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn importance_sampling_beats_naive_in_deep_tail() {
    let v = Threshold::new(4.0, 4.0);
    let s = McSettings::new(20_000, 8);
    let naive = estimate_tail_naive(100, v, 0.5, s).unwrap();
    let is = estimate_tail_is(100, v, 0.5, s).unwrap();
    assert!(naive.hits >= 1);
    assert!(is.std_err_log < naive.std_err_log, "{} vs {}", is.std_err_log, naive.std_err_log);

    let far = Threshold::new(6.0, 6.0);
    let naive = estimate_tail_naive(100, far, 0.5, McSettings::new(2000, 8)).unwrap();
    assert_eq!(naive.hits, 0);
    assert_eq!(naive.warning, Some(Warning::ZeroHits));
    assert!(naive.log_p.is_zero());
    let is = estimate_tail_is(100, far, 0.5, McSettings::new(2000, 8)).unwrap();
    assert!(is.std_err_log.is_finite() && is.log_p.ln().is_finite());
}

#[test]
fn coincidence_moves_toward_regime_limit() {
    let path = |u: Threshold, rho: f64, trials: u64| -> Vec<f64> {
        [1_000u64, 10_000, 100_000]
            .into_iter()
            .map(|n| {
                let a = (n as f64).ln().sqrt();
                index_coincidence(n, a, u, rho, McSettings::new(trials, 21)).unwrap().p_distinct
            })
            .collect()
    };
    let up = path(Threshold::new(1.6, 1.6), 0.0, 400);
    assert!(up.windows(2).all(|w| w[1] > w[0]), "{up:?}");
    let down = path(Threshold::new(2.5, 1.6), 0.9, 200);
    assert!(down.windows(2).all(|w| w[1] < w[0]), "{down:?}");
}

#[test]
fn coincidence_degenerate_and_insufficient() {
    let u = Threshold::new(1.0, 0.8);
    let e = index_coincidence(20, 2.0, u, 1.0, McSettings::new(2000, 1)).unwrap();
    assert_eq!(e.p_distinct, 0.0);
    assert_eq!(e.distinct_hits, 0);

    let r = index_coincidence(10, 1.0, Threshold::new(2.0, 2.0), 0.0, McSettings::new(10, 1));
    assert!(matches!(r, Err(Error::InsufficientHits { .. })));
}

#[test]
fn naive_coincidence_counts_are_integral() {
    let e = index_coincidence(200, 1.5, Threshold::new(1.5, 1.5), 0.2, McSettings::new(5000, 6)).unwrap();
    assert_eq!(e.method, Method::Naive);
    let k = e.p_distinct * e.conditioning_hits as f64;
    assert!((k - e.distinct_hits as f64).abs() < 1e-9);
}

#[test]
fn estimator_input_errors() {
    let v = Threshold::new(1.0, 1.0);
    assert!(estimate_tail_is(0, v, 0.0, McSettings::new(10, 1)).is_err());
    assert!(estimate_tail_naive(10, v, 0.0, McSettings::new(0, 1)).is_err());
    assert!(estimate_tail_is(10, Threshold::new(f64::NAN, 1.0), 0.0, McSettings::new(10, 1)).is_err());
    assert!(estimate_tail_naive(10, v, -1.5, McSettings::new(10, 1)).is_err());
}

/// Mean of the maximum of `n = 10⁵` standard normals: Monte Carlo against
/// the exact mean `∫₀^∞ (1 − Φⁿ) − ∫_{−∞}^0 Φⁿ`, and the classical Gumbel
/// location plus `γ/√(2 log n)` against the exact mean.
#[test]
fn maximum_matches_extreme_value_location() {
    let n = 100_000u64;
    let nf = n as f64;
    let ln_cdf_pow = |x: f64| nf * (-ln_std_normal_tail(x).exp()).ln_1p();
    let upper = integrate(|x| -ln_cdf_pow(x).exp_m1(), 0.0, 12.0, &[3.0, 4.0, 4.5, 5.0, 6.0], 1e-13, 1e-13, 2000);
    let mean = upper.value; // the negative half is below e^{-n/2}

    let l = nf.ln();
    let gumbel = (2.0 * l).sqrt() - (l.ln() + (4.0 * std::f64::consts::PI).ln()) / (2.0 * (2.0 * l).sqrt());
    let euler_gamma = 0.5772156649015329;
    assert!((gumbel + euler_gamma / (2.0 * l).sqrt() - mean).abs() < 0.05);

    let f = StreamFactory::new(99);
    let reps = 200;
    let xs: Vec<f64> = (0..reps).map(|r| sample_componentwise_max(n, 0.0, &mut f.trial(r)).max1).collect();
    let m = xs.iter().sum::<f64>() / reps as f64;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let se = sd / (reps as f64).sqrt();
    assert!((m - mean).abs() < 3.0 * se, "{m} vs {mean} (se {se})");
}

#[test]
fn importance_sampling_handles_perfect_correlation() {
    let v = Threshold::new(4.0, 3.0);
    for rho in [1.0, -1.0] {
        let e = estimate_tail_is(20, v, rho, McSettings::new(4000, 12)).unwrap();
        let want = exact(20, v, rho);
        assert!(e.log_p.ln().is_finite() || want == f64::NEG_INFINITY);
        if want.is_finite() {
            assert!(e.z_score(want).abs() < 4.0, "rho {rho}: z {}", e.z_score(want));
        }
    }
}

//! Sampling estimators for the tail of the component-wise maximum.
//!
//! Trials are grouped into fixed-size blocks whose size depends only on
//! `(n, trials)`. Blocks run in parallel, each trial draws from its own
//! counter-based stream, and block accumulators are merged in block order,
//! so every estimate is bit-identical for any number of workers.
//!
//! The importance sampler is a two-component mixture over which samples
//! get a mean shift:
//!
//! * mode A: one uniformly chosen sample is shifted to the dominant point
//!   `x*` of the quadratic program (one index carries both maxima);
//! * mode B: one sample is shifted to `(v1, ρv1)` and a different one to
//!   `(ρv2, v2)` (two indices carry one maximum each).
//!
//! The weight is the likelihood ratio against the full mixture density
//! (summed over all choices of shifted samples), which keeps it bounded by
//! roughly `n` divided by the shifted samples' own ratios.

use rand_core::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{check_rho, one_minus_rho_sq, standard_normal_pair};
use crate::logspace::{LogProb, LogSumAcc};
use crate::oracle::{exact_max_tail, SampleSize};
use crate::rate::{standardized_qp, Threshold};
use crate::rng::{index_below, uniform, StreamFactory};

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "BIVEX_THREADS";
/// Below this effective sample size an IS estimate carries a warning.
pub const MIN_ESS: f64 = 30.0;
/// Fewest conditioning hits accepted by [`index_coincidence`].
pub const MIN_CONDITIONING_HITS: u64 = 30;
/// Target number of bivariate draws per block.
const DRAWS_PER_BLOCK: u64 = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Method {
    Naive,
    ImportanceSampling,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::ImportanceSampling => "is",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Warning {
    /// No trial hit the event; the estimate is `log 0` with infinite error.
    ZeroHits,
    /// Effective sample size below [`MIN_ESS`].
    EffectiveSampleCollapse,
}

/// Trial count, seed and worker cap of one estimator run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    /// `None`: use `BIVEX_THREADS` if set, else the hardware default.
    pub workers: Option<usize>,
}

impl McSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        McSettings { trials, seed, workers: None }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Worker count from `BIVEX_THREADS`, if set to a positive integer.
pub fn env_workers() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&w: &usize| w > 0)
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let threads = workers.or_else(env_workers).unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn block_ranges(n: u64, trials: u64) -> Vec<(u64, u64)> {
    let size = (DRAWS_PER_BLOCK / n.max(1)).clamp(1, 4096);
    (0..trials.div_ceil(size)).map(|b| (b * size, ((b + 1) * size).min(trials))).collect()
}

/// Component-wise maximum of `n` draws and the (1-based) indices attaining
/// it; ties go to the smallest index.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ComponentwiseMax {
    pub max1: f64,
    pub max2: f64,
    pub argmax1: u64,
    pub argmax2: u64,
}

/// Streams `n` standard bivariate pairs from `rng` in O(1) memory.
pub fn sample_componentwise_max<R: RngCore + ?Sized>(n: u64, rho: f64, rng: &mut R) -> ComponentwiseMax {
    assert!(n >= 1, "n must be at least 1");
    let s = one_minus_rho_sq(rho).max(0.0).sqrt();
    let mut m = ComponentwiseMax { max1: f64::NEG_INFINITY, max2: f64::NEG_INFINITY, argmax1: 0, argmax2: 0 };
    for i in 1..=n {
        let (z1, z) = standard_normal_pair(rng);
        let x2 = rho * z1 + s * z;
        if z1 > m.max1 {
            m.max1 = z1;
            m.argmax1 = i;
        }
        if x2 > m.max2 {
            m.max2 = x2;
            m.argmax2 = i;
        }
    }
    m
}

/// Tail probability estimate in log space.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TailEstimate {
    pub log_p: LogProb,
    /// Delta-method standard error of `log_p`.
    pub std_err_log: f64,
    pub trials: u64,
    pub method: Method,
    pub seed: u64,
    /// Trials in which the event occurred (under the sampling law).
    pub hits: u64,
    /// `(Σw)²/Σw²`; equals `hits` for the naive estimator.
    pub ess: f64,
    pub warning: Option<Warning>,
}

impl TailEstimate {
    /// `(log_p − reference) / std_err_log`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.log_p.ln() - reference) / self.std_err_log
    }
}

fn check_inputs(n: u64, v: Threshold, rho: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if v.u1.is_nan() || v.u2.is_nan() {
        return Err(Error::NanInput);
    }
    check_rho(rho)
}

#[derive(Clone, Copy, Default)]
struct NaiveCounts {
    hits: u64,
    distinct: u64,
}

fn naive_counts(n: u64, v: Threshold, rho: f64, settings: &McSettings) -> NaiveCounts {
    let factory = StreamFactory::new(settings.seed);
    let blocks = block_ranges(n, settings.trials);
    let per_block: Vec<NaiveCounts> = with_pool(settings.workers, || {
        blocks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut c = NaiveCounts::default();
                for t in lo..hi {
                    let m = sample_componentwise_max(n, rho, &mut factory.trial(t));
                    if m.max1 > v.u1 && m.max2 > v.u2 {
                        c.hits += 1;
                        c.distinct += u64::from(m.argmax1 != m.argmax2);
                    }
                }
                c
            })
            .collect()
    });
    per_block
        .iter()
        .fold(NaiveCounts::default(), |a, b| NaiveCounts { hits: a.hits + b.hits, distinct: a.distinct + b.distinct })
}

/// Hit-frequency estimate of `P(X̄_n > v)`.
pub fn estimate_tail_naive(n: u64, v: Threshold, rho: f64, settings: McSettings) -> Result<TailEstimate> {
    check_inputs(n, v, rho)?;
    settings.check()?;
    let hits = naive_counts(n, v, rho, &settings).hits;
    let t = settings.trials as f64;
    let p = hits as f64 / t;
    let (std_err_log, warning) =
        if hits == 0 { (f64::INFINITY, Some(Warning::ZeroHits)) } else { (((1.0 - p) / hits as f64).sqrt(), None) };
    Ok(TailEstimate {
        log_p: LogProb::clamp(p.ln()),
        std_err_log,
        trials: settings.trials,
        method: Method::Naive,
        seed: settings.seed,
        hits,
        ess: hits as f64,
        warning,
    })
}

/// Mean shifts of the mixture proposal, in the coordinates `w = (z1, z)`
/// of the conditional representation `X = (z1, ρz1 + √(1−ρ²) z)`.
#[derive(Clone, Copy, Debug)]
struct IsPlan {
    n: u64,
    rho: f64,
    s: f64,
    v: Threshold,
    /// Probability of mode A.
    alpha: f64,
    da: [f64; 2],
    dk: [f64; 2],
    dl: [f64; 2],
}

fn shift_for_mean(rho: f64, s: f64, mu: (f64, f64)) -> [f64; 2] {
    if s == 0.0 {
        [mu.0, 0.0]
    } else {
        [mu.0, (mu.1 - rho * mu.0) / s]
    }
}

fn norm_sq(d: [f64; 2]) -> f64 {
    d[0] * d[0] + d[1] * d[1]
}

impl IsPlan {
    fn new(n: u64, v: Threshold, rho: f64) -> Self {
        let s = one_minus_rho_sq(rho).max(0.0).sqrt();
        let x_star = if rho.abs() == 1.0 {
            let m = if rho > 0.0 { v.u1.max(v.u2) } else { v.u1 };
            (m, rho * m)
        } else {
            standardized_qp(v, rho).minimizer
        };
        let (p1, p2) = (v.u1.max(0.0), v.u2.max(0.0));
        IsPlan {
            n,
            rho,
            s,
            v,
            alpha: if n == 1 { 1.0 } else { 0.5 },
            da: shift_for_mean(rho, s, x_star),
            dk: shift_for_mean(rho, s, (p1, rho * p1)),
            dl: shift_for_mean(rho, s, (rho * p2, p2)),
        }
    }

    /// One trial under the mixture: whether the event occurred, whether
    /// the argmax indices differ, and `log(f/q)`.
    fn trial<R: RngCore + ?Sized>(&self, rng: &mut R) -> (bool, bool, f64) {
        let n = self.n;
        let (mode_a, first, second) = if uniform(rng) < self.alpha {
            (true, index_below(rng, n), u64::MAX)
        } else {
            let k = index_below(rng, n);
            let mut l = index_below(rng, n - 1);
            if l >= k {
                l += 1;
            }
            (false, k, l)
        };
        let (da, dk, dl) = (self.da, self.dk, self.dl);
        let (ca, ck, cl) = (norm_sq(da), norm_sq(dk), norm_sq(dl));
        // r' = exp(δ·w − |δ|²) = r·exp(−½|δ|²): the shifted sample sits near 1.
        let (mut sa, mut sk, mut sl, mut pair) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let (mut max1, mut max2, mut arg1, mut arg2) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0u64, 0u64);
        for i in 0..n {
            let (mut z1, mut z) = standard_normal_pair(rng);
            if i == first {
                let d = if mode_a { da } else { dk };
                z1 += d[0];
                z += d[1];
            } else if i == second {
                z1 += dl[0];
                z += dl[1];
            }
            let x2 = self.rho * z1 + self.s * z;
            if z1 > max1 {
                max1 = z1;
                arg1 = i;
            }
            if x2 > max2 {
                max2 = x2;
                arg2 = i;
            }
            sa += (da[0] * z1 + da[1] * z - ca).exp();
            if self.alpha < 1.0 {
                let rk = (dk[0] * z1 + dk[1] * z - ck).exp();
                let rl = (dl[0] * z1 + dl[1] * z - cl).exp();
                pair += rk * sl + rl * sk;
                sk += rk;
                sl += rl;
            }
        }
        let event = max1 > self.v.u1 && max2 > self.v.u2;
        if !event {
            return (false, false, f64::NEG_INFINITY);
        }
        let nf = n as f64;
        let log_qa = self.alpha.ln() - nf.ln() + sa.ln() + 0.5 * ca;
        let log_q = if self.alpha < 1.0 {
            let log_qb = (1.0 - self.alpha).ln() - nf.ln() - (nf - 1.0).ln() + pair.ln() + 0.5 * (ck + cl);
            crate::logspace::log_add_exp(log_qa, log_qb)
        } else {
            log_qa
        };
        (true, arg1 != arg2, -log_q)
    }
}

#[derive(Clone, Copy, Default, Debug)]
struct IsAcc {
    hits: u64,
    distinct_hits: u64,
    s1: LogSumAcc,
    s2: LogSumAcc,
    s1_distinct: LogSumAcc,
    s2_distinct: LogSumAcc,
}

impl IsAcc {
    fn merge(&mut self, o: &IsAcc) {
        self.hits += o.hits;
        self.distinct_hits += o.distinct_hits;
        self.s1.merge(&o.s1);
        self.s2.merge(&o.s2);
        self.s1_distinct.merge(&o.s1_distinct);
        self.s2_distinct.merge(&o.s2_distinct);
    }
}

fn run_is(plan: &IsPlan, settings: &McSettings) -> IsAcc {
    let factory = StreamFactory::new(settings.seed);
    let blocks = block_ranges(plan.n, settings.trials);
    let per_block: Vec<IsAcc> = with_pool(settings.workers, || {
        blocks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut acc = IsAcc::default();
                for t in lo..hi {
                    let (event, distinct, lw) = plan.trial(&mut factory.trial(t));
                    if event {
                        acc.hits += 1;
                        acc.s1.push(lw);
                        acc.s2.push(2.0 * lw);
                        if distinct {
                            acc.distinct_hits += 1;
                            acc.s1_distinct.push(lw);
                            acc.s2_distinct.push(2.0 * lw);
                        }
                    }
                }
                acc
            })
            .collect()
    });
    let mut total = IsAcc::default();
    for b in &per_block {
        total.merge(b);
    }
    total
}

/// Importance-sampling estimate of `P(X̄_n > v)` with the two-mode
/// mean-shift mixture described in the module docs. Unbiased for every
/// `ρ ∈ [−1, 1]` and every level.
pub fn estimate_tail_is(n: u64, v: Threshold, rho: f64, settings: McSettings) -> Result<TailEstimate> {
    check_inputs(n, v, rho)?;
    settings.check()?;
    let acc = run_is(&IsPlan::new(n, v, rho), &settings);
    let t = settings.trials as f64;
    let (l1, l2) = (acc.s1.value(), acc.s2.value());
    if acc.hits == 0 {
        return Ok(TailEstimate {
            log_p: LogProb::ZERO,
            std_err_log: f64::INFINITY,
            trials: settings.trials,
            method: Method::ImportanceSampling,
            seed: settings.seed,
            hits: 0,
            ess: 0.0,
            warning: Some(Warning::ZeroHits),
        });
    }
    let ess = (2.0 * l1 - l2).exp();
    let rel_var = ((l2 - 2.0 * l1).exp() - 1.0 / t).max(0.0);
    Ok(TailEstimate {
        log_p: LogProb::clamp(l1 - t.ln()),
        std_err_log: rel_var.sqrt(),
        trials: settings.trials,
        method: Method::ImportanceSampling,
        seed: settings.seed,
        hits: acc.hits,
        ess,
        warning: (ess < MIN_ESS).then_some(Warning::EffectiveSampleCollapse),
    })
}

/// Estimate of `P(I* ≠ J* | X̄_n > v)`, where `I*`, `J*` are the indices of
/// the two coordinate maxima.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct IndexCoincidenceEstimate {
    pub p_distinct: f64,
    pub std_err: f64,
    /// Trials in which the conditioning event occurred.
    pub conditioning_hits: u64,
    /// Of those, trials with `I* ≠ J*`.
    pub distinct_hits: u64,
    pub trials: u64,
    pub method: Method,
    pub seed: u64,
}

/// Predicted number of naive hits above which the naive estimator is used.
pub const NAIVE_HIT_TARGET: f64 = 200.0;

/// `P(I* ≠ J* | X̄_n > a_n u)`.
///
/// Uses plain rejection when the exact tail predicts at least
/// [`NAIVE_HIT_TARGET`] hits (then `p_distinct · conditioning_hits` is the
/// integer count of distinct-index hits), and otherwise the ratio of
/// importance-weighted sums under the mixture proposal.
pub fn index_coincidence(
    n: u64,
    a_n: f64,
    u: Threshold,
    rho: f64,
    settings: McSettings,
) -> Result<IndexCoincidenceEstimate> {
    let v = u.scaled(a_n);
    check_inputs(n, v, rho)?;
    settings.check()?;
    let predicted = exact_max_tail(SampleSize::new(n)?, v, rho)?.prob() * settings.trials as f64;
    let est = if predicted >= NAIVE_HIT_TARGET {
        let c = naive_counts(n, v, rho, &settings);
        let p = if c.hits == 0 { 0.0 } else { c.distinct as f64 / c.hits as f64 };
        IndexCoincidenceEstimate {
            p_distinct: p,
            std_err: (p * (1.0 - p) / c.hits.max(1) as f64).sqrt(),
            conditioning_hits: c.hits,
            distinct_hits: c.distinct,
            trials: settings.trials,
            method: Method::Naive,
            seed: settings.seed,
        }
    } else {
        let acc = run_is(&IsPlan::new(n, v, rho), &settings);
        let (b, a) = (acc.s1.value(), acc.s1_distinct.value());
        let p = if acc.distinct_hits == 0 { 0.0 } else { (a - b).exp().min(1.0) };
        // Ratio-estimator variance Σ w²(d − p)² / (Σw)².
        let s2_same = crate::logspace::log_diff_exp(acc.s2.value(), acc.s2_distinct.value());
        let var = (acc.s2_distinct.value() - 2.0 * b).exp() * (1.0 - p) * (1.0 - p)
            + if s2_same.is_nan() { 0.0 } else { (s2_same - 2.0 * b).exp() * p * p };
        IndexCoincidenceEstimate {
            p_distinct: p,
            std_err: var.sqrt(),
            conditioning_hits: acc.hits,
            distinct_hits: acc.distinct_hits,
            trials: settings.trials,
            method: Method::ImportanceSampling,
            seed: settings.seed,
        }
    };
    if est.conditioning_hits < MIN_CONDITIONING_HITS {
        return Err(Error::InsufficientHits { hits: est.conditioning_hits });
    }
    Ok(est)
}

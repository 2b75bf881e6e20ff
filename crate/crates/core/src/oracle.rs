//! Exact finite-`n` tail probabilities of the component-wise maximum.
//!
//! Each sample `X_i` falls in one of four cells relative to the level `v`:
//! both coordinates above (`p11`), only the first (`p10`), only the second
//! (`p01`), or neither. The event `{X̄_n > v}` happens iff some sample is in
//! the `11` cell, or none is and both the `10` and `01` cells are occupied.
//! Conditioning on "no `11`" turns the second part into an occupancy
//! probability for a three-cell multinomial, which is evaluated without
//! subtracting nearly equal quantities. Sample sizes are carried as `log n`
//! so that `n = e^{100}` is as easy as `n = 10`.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::gaussian::{bvn_upper_tail, check_rho, ln_std_normal_tail};
use crate::logspace::{log1m_exp, log1m_pow_complement, log_add_exp, log_diff_exp, LogProb, LogSumAcc};
use crate::rate::{rate_i, sharp_constants, Regime, SharpAsymptote, Threshold};

/// Below this value of `n·s` the occupancy probability is summed as a
/// series; above it the closed form is used.
pub const SERIES_SWITCH: f64 = 1e-4;
/// Both branches are evaluated on `[SERIES_SWITCH/10, SERIES_SWITCH·10]`.
const CROSSOVER_BAND: (f64, f64) = (1e-5, 1e-3);
/// Relative disagreement between branches that raises `precision_loss`.
pub const PRECISION_LOSS_TOL: f64 = 1e-6;

/// Number of samples, stored as `log n`, optionally with the exact integer.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SampleSize {
    log_n: f64,
    exact: Option<u64>,
}

impl SampleSize {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        Ok(SampleSize { log_n: (n as f64).ln(), exact: Some(n) })
    }

    /// `n = e^{log_n}`, for sample sizes beyond the integer range.
    pub fn from_log(log_n: f64) -> Result<Self> {
        if log_n.is_nan() {
            return Err(Error::NanInput);
        }
        if !(log_n >= 0.0 && log_n.is_finite()) {
            return Err(Error::InvalidArgument(format!("log n must be finite and ≥ 0, got {log_n}")));
        }
        Ok(SampleSize { log_n, exact: None })
    }

    pub fn from_log10(log10_n: f64) -> Result<Self> {
        Self::from_log(log10_n * std::f64::consts::LN_10)
    }

    pub fn log_n(&self) -> f64 {
        self.log_n
    }

    pub fn exact(&self) -> Option<u64> {
        self.exact
    }

    pub fn as_f64(&self) -> f64 {
        match self.exact {
            Some(n) => n as f64,
            None => self.log_n.exp(),
        }
    }

    /// `log(n − k)`, `-∞` once `k ≥ n`.
    pub fn log_minus(&self, k: u64) -> f64 {
        match self.exact {
            Some(n) if k >= n => f64::NEG_INFINITY,
            Some(n) => ((n - k) as f64).ln(),
            None => {
                let frac = k as f64 * (-self.log_n).exp();
                if frac >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    self.log_n + (-frac).ln_1p()
                }
            }
        }
    }

    /// `log(n(n−1)⋯(n−k+1))`.
    pub fn log_falling(&self, k: u64) -> f64 {
        (0..k).map(|i| self.log_minus(i)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ScalingKind {
    RightScale,
    LargeScale,
    Explicit,
}

/// A sample size together with the level multiplier `a_n`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ScalingSequence {
    pub kind: ScalingKind,
    pub n: SampleSize,
    pub a_n: f64,
}

impl ScalingSequence {
    /// `a_n = √(log n)`.
    pub fn right(n: SampleSize) -> Self {
        ScalingSequence { kind: ScalingKind::RightScale, n, a_n: n.log_n().sqrt() }
    }

    /// Requires `a_n² > log n`.
    pub fn large(n: SampleSize, a_n: f64) -> Result<Self> {
        check_a(a_n)?;
        if a_n * a_n <= n.log_n() {
            return Err(Error::InvalidScaling(format!(
                "large scale needs a_n² > log n, got a_n = {a_n}, log n = {}",
                n.log_n()
            )));
        }
        Ok(ScalingSequence { kind: ScalingKind::LargeScale, n, a_n })
    }

    pub fn explicit(n: SampleSize, a_n: f64) -> Result<Self> {
        check_a(a_n)?;
        Ok(ScalingSequence { kind: ScalingKind::Explicit, n, a_n })
    }

    pub fn level(&self, u: Threshold) -> Threshold {
        u.scaled(self.a_n)
    }
}

fn check_a(a_n: f64) -> Result<()> {
    if a_n.is_nan() {
        return Err(Error::NanInput);
    }
    if !(a_n > 0.0 && a_n.is_finite()) {
        return Err(Error::InvalidScaling(format!("a_n must be positive and finite, got {a_n}")));
    }
    Ok(())
}

fn check_level(v: Threshold) -> Result<()> {
    if v.u1.is_nan() || v.u2.is_nan() {
        return Err(Error::NanInput);
    }
    Ok(())
}

/// The four cell probabilities of one sample, in logs.
#[derive(Clone, Copy, Debug)]
struct Cells {
    p11: f64,
    p10: f64,
    p01: f64,
}

fn cells(v: Threshold, rho: f64) -> Result<Cells> {
    Ok(Cells {
        p11: bvn_upper_tail(v.u1, v.u2, rho)?.ln(),
        p10: bvn_upper_tail(v.u1, -v.u2, -rho)?.ln(),
        p01: bvn_upper_tail(-v.u1, v.u2, -rho)?.ln(),
    })
}

/// Which evaluation path produced the occupancy term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Branch {
    ClosedForm,
    Series,
}

/// [`exact_max_tail`] with diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ExactTail {
    pub log_p: LogProb,
    pub branch: Branch,
    /// Relative disagreement of the two branches, when both were evaluated.
    pub branch_gap: Option<f64>,
    /// Set when `branch_gap` exceeds [`PRECISION_LOSS_TOL`].
    pub precision_loss: bool,
}

/// `log P(N_big ≥ 1, N_small ≥ 1)` for a multinomial with `n` trials and
/// cell probabilities `s_big ≥ s_small`, closed form.
fn occupancy_closed(n: &SampleSize, ls_big: f64, ls_small: f64) -> f64 {
    // A(s_big) − (1 − s_small)^n · A(s_big / (1 − s_small))
    let a_big = log1m_pow_complement(n.log_n(), ls_big);
    let l1m_small = log1m_exp(ls_small);
    let lt = ls_big - l1m_small;
    let sub = n.as_f64() * l1m_small + log1m_pow_complement(n.log_n(), lt);
    if sub >= a_big {
        return f64::NEG_INFINITY;
    }
    log_diff_exp(a_big, sub)
}

/// Same quantity as a sum over the number `j ≥ 1` of samples in the small
/// cell: `Σ C(n,j) s^j (1−s)^{n−j} A_{n−j}(t)` with `t = s_big/(1−s_small)`.
fn occupancy_series(n: &SampleSize, ls_big: f64, ls_small: f64) -> f64 {
    let l1m_small = log1m_exp(ls_small);
    let lt = ls_big - l1m_small;
    let mut acc = LogSumAcc::default();
    let mut log_binom = 0.0;
    let mut best = f64::NEG_INFINITY;
    for j in 1..=200u64 {
        let lm = n.log_minus(j - 1);
        if lm == f64::NEG_INFINITY {
            break;
        }
        log_binom += lm - (j as f64).ln();
        let rest = (n.as_f64() - j as f64).max(0.0);
        let log_rest = n.log_minus(j);
        let term = log_binom + j as f64 * ls_small + rest * l1m_small + log1m_pow_complement(log_rest, lt);
        acc.push(term);
        best = best.max(term);
        if term < best - 40.0 {
            break;
        }
    }
    acc.value()
}

fn combine(n: &SampleSize, c: &Cells, occupancy: f64) -> f64 {
    let direct = log1m_pow_complement(n.log_n(), c.p11);
    let none = n.as_f64() * log1m_exp(c.p11);
    log_add_exp(direct, none + occupancy)
}

/// `log P(max_i X_i⁽¹⁾ > v1, max_i X_i⁽²⁾ > v2)` for `n` i.i.d. standard
/// bivariate normal samples, with branch diagnostics.
pub fn exact_max_tail_checked(n: SampleSize, v: Threshold, rho: f64) -> Result<ExactTail> {
    check_level(v)?;
    check_rho(rho)?;
    let c = cells(v, rho)?;
    let done =
        |lp: f64, branch| ExactTail { log_p: LogProb::clamp(lp), branch, branch_gap: None, precision_loss: false };
    if c.p11 >= 0.0 {
        return Ok(done(0.0, Branch::ClosedForm));
    }
    if n.exact() == Some(1) {
        return Ok(done(c.p11, Branch::ClosedForm));
    }
    if c.p10 == f64::NEG_INFINITY || c.p01 == f64::NEG_INFINITY {
        return Ok(done(log1m_pow_complement(n.log_n(), c.p11), Branch::ClosedForm));
    }
    let l1m11 = log1m_exp(c.p11);
    let (s1, s2) = (c.p10 - l1m11, c.p01 - l1m11);
    let (ls_big, ls_small) = if s1 >= s2 { (s1, s2) } else { (s2, s1) };
    let ns = (n.log_n() + ls_small).exp();

    let closed = || combine(&n, &c, occupancy_closed(&n, ls_big, ls_small));
    let series = || combine(&n, &c, occupancy_series(&n, ls_big, ls_small));
    let primary = if ns >= SERIES_SWITCH { Branch::ClosedForm } else { Branch::Series };
    if ns >= CROSSOVER_BAND.0 && ns <= CROSSOVER_BAND.1 {
        let (a, b) = (closed(), series());
        let gap = (a - b).exp_m1().abs();
        let value = if primary == Branch::ClosedForm { a } else { b };
        return Ok(ExactTail {
            log_p: LogProb::clamp(value),
            branch: primary,
            branch_gap: Some(gap),
            precision_loss: gap > PRECISION_LOSS_TOL,
        });
    }
    let value = if primary == Branch::ClosedForm { closed() } else { series() };
    Ok(done(value, primary))
}

/// `log P(X̄_n > v)`, the exact tail of the component-wise maximum.
pub fn exact_max_tail(n: SampleSize, v: Threshold, rho: f64) -> Result<LogProb> {
    Ok(exact_max_tail_checked(n, v, rho)?.log_p)
}

/// `log P(∃ i ≤ n : X_i > v)` = `log(1 − (1 − q12)^n)`: a single sample
/// exceeds both levels.
pub fn exists_single_index_tail(n: SampleSize, v: Threshold, rho: f64) -> Result<LogProb> {
    check_level(v)?;
    let q12 = bvn_upper_tail(v.u1, v.u2, rho)?;
    Ok(LogProb::clamp(log1m_pow_complement(n.log_n(), q12.ln())))
}

/// Inclusion-exclusion pieces for the union over ordered index pairs
/// `A_(i,j) = {X_i⁽¹⁾ > v1, X_j⁽²⁾ > v2}`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TailDecomposition {
    /// Exact `log P(X̄_n > v)`.
    pub log_t: LogProb,
    /// `log(n(n−1) q1 q2)`: pairs with `i ≠ j`.
    pub log_s_unequal: f64,
    /// `log(n q12)`: pairs with `i = j`.
    pub log_s_equal: f64,
    /// `log e_n`, the second Bonferroni sum.
    pub log_e_n: f64,
}

impl TailDecomposition {
    /// `log Σ P(A_(i,j))`, the union upper bound.
    pub fn log_union(&self) -> f64 {
        log_add_exp(self.log_s_unequal, self.log_s_equal)
    }

    /// `log(Σ P(A) − e_n)`, or `-∞` when the bound is vacuous.
    pub fn log_lower(&self) -> f64 {
        let s = self.log_union();
        if self.log_e_n >= s {
            f64::NEG_INFINITY
        } else {
            log_diff_exp(s, self.log_e_n)
        }
    }

    /// Which of the two first-order sums is larger.
    pub fn dominant(&self) -> Regime {
        if self.log_s_unequal > self.log_s_equal {
            Regime::TwoIndexDominant
        } else if self.log_s_unequal < self.log_s_equal {
            Regime::OneIndexDominant
        } else {
            Regime::Boundary
        }
    }
}

/// Exact tail plus first- and second-order inclusion-exclusion sums at
/// level `a_n·u`.
///
/// Both orientations of a pair `(i, j)` are distinct events, so the
/// unequal-index count is `n(n−1)` also for `u1 = u2`.
pub fn union_sum(scaling: &ScalingSequence, u: Threshold, rho: f64) -> Result<TailDecomposition> {
    check_sorted(u)?;
    let v = scaling.level(u);
    let n = scaling.n;
    let (q1, q2) = (ln_std_normal_tail(v.u1), ln_std_normal_tail(v.u2));
    let q12 = bvn_upper_tail(v.u1, v.u2, rho)?.ln();
    Ok(TailDecomposition {
        log_t: exact_max_tail(n, v, rho)?,
        log_s_unequal: n.log_falling(2) + q1 + q2,
        log_s_equal: n.log_n() + q12,
        log_e_n: error_terms_at(n, v, rho)?
            .iter()
            .map(|t| t.log_term)
            .fold(LogSumAcc::default(), |mut a, x| {
                a.push(x);
                a
            })
            .value(),
    })
}

fn check_sorted(u: Threshold) -> Result<()> {
    if u.u1.is_nan() || u.u2.is_nan() {
        return Err(Error::NanInput);
    }
    if u.u2 > u.u1 {
        return Err(Error::UnsortedThreshold { u1: u.u1, u2: u.u2 });
    }
    Ok(())
}

/// One coincidence pattern of the indices `(i, j, k, l)` in
/// `P(A_(i,j) ∩ A_(k,l))`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ErrorTerm {
    /// Equal indices joined by `=`, blocks separated by `,`; e.g. `"i=j,k,l"`.
    pub pattern: String,
    /// Number of distinct sample indices involved.
    pub blocks: usize,
    /// `log` of the number of unordered pairs `{(i,j), (k,l)}` with this
    /// pattern.
    pub log_count: f64,
    /// `log` of the probability of one such intersection.
    pub log_prob: f64,
    pub log_term: f64,
}

/// All set partitions of four labelled positions, as restricted growth
/// strings.
fn partitions4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(15);
    for b in 0..2 {
        for c in 0..=(b + 1).min(2) {
            let m = b.max(c);
            for d in 0..=m + 1 {
                out.push([0, b, c, d]);
            }
        }
    }
    out
}

fn error_terms_at(n: SampleSize, v: Threshold, rho: f64) -> Result<Vec<ErrorTerm>> {
    let (q1, q2) = (ln_std_normal_tail(v.u1), ln_std_normal_tail(v.u2));
    let q12 = bvn_upper_tail(v.u1, v.u2, rho)?.ln();
    const NAMES: [char; 4] = ['i', 'j', 'k', 'l'];
    // positions 0 and 2 need coordinate 1, positions 1 and 3 coordinate 2
    let mut terms = Vec::new();
    for p in partitions4() {
        if p[0] == p[2] && p[1] == p[3] {
            continue; // the same pair twice
        }
        let blocks = p.iter().max().unwrap() + 1;
        let mut log_prob = 0.0;
        let mut names = Vec::with_capacity(blocks);
        for blk in 0..blocks {
            let members: Vec<usize> = (0..4).filter(|&i| p[i] == blk).collect();
            let first = members.iter().any(|&i| i % 2 == 0);
            let second = members.iter().any(|&i| i % 2 == 1);
            log_prob += match (first, second) {
                (true, true) => q12,
                (true, false) => q1,
                _ => q2,
            };
            names.push(members.iter().map(|&i| NAMES[i].to_string()).collect::<Vec<_>>().join("="));
        }
        let log_count = n.log_falling(blocks as u64) - LN_2;
        terms.push(ErrorTerm { pattern: names.join(","), blocks, log_count, log_prob, log_term: log_count + log_prob });
    }
    Ok(terms)
}

/// Every term of `e_n = Σ_{α<β} P(A_α ∩ A_β)` at level `a_n·u`, by
/// coincidence pattern of the four indices. Counts are exact falling
/// factorials of `n`, so the sum is the exact second Bonferroni term.
pub fn error_term_cases(scaling: &ScalingSequence, u: Threshold, rho: f64) -> Result<Vec<ErrorTerm>> {
    check_sorted(u)?;
    error_terms_at(scaling.n, scaling.level(u), rho)
}

/// `log e_n`; `-∞` for `n = 1`.
pub fn error_term_bound(scaling: &ScalingSequence, u: Threshold, rho: f64) -> Result<LogProb> {
    let mut acc = LogSumAcc::default();
    for t in error_term_cases(scaling, u, rho)? {
        acc.push(t.log_term);
    }
    // e_n can exceed 1 in the bulk; it is only meaningful as a log bound.
    Ok(LogProb::new(acc.value()).unwrap_or(LogProb::ONE))
}

/// `a_n^b · n^{-c} · e^{a_n² I(u)} · P(X̄_n > a_n u)` together with the
/// constants used.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SharpRatio {
    pub ratio: f64,
    pub constants: SharpAsymptote,
}

/// Sharp-asymptote ratio at finite `n`; tends to `K` as `a_n → ∞`.
pub fn sharp_ratio_detailed(scaling: &ScalingSequence, u: Threshold, rho: f64) -> Result<SharpRatio> {
    let a = scaling.a_n;
    if a * a <= scaling.n.log_n() {
        return Err(Error::InvalidScaling(format!(
            "sharp ratio needs a_n² > log n, got a_n = {a}, log n = {}",
            scaling.n.log_n()
        )));
    }
    let k = sharp_constants(u, rho)?;
    let t = exact_max_tail(scaling.n, scaling.level(u), rho)?;
    let log_ratio = k.b as f64 * a.ln() - k.c as f64 * scaling.n.log_n() + a * a * k.rate + t.ln();
    Ok(SharpRatio { ratio: log_ratio.exp(), constants: k })
}

pub fn sharp_ratio(scaling: &ScalingSequence, u: Threshold, rho: f64) -> Result<f64> {
    Ok(sharp_ratio_detailed(scaling, u, rho)?.ratio)
}

/// `2π a² e^{a² M(u)/2} P(Z > a u)` with `M` the Mahalanobis form; defined
/// for `ρ u1 < u2 ≤ u1`. See [`laplace_prefactor_limit`] for its limit.
pub fn laplace_prefactor_check(a_n: f64, u: Threshold, rho: f64) -> Result<f64> {
    check_a(a_n)?;
    check_sorted(u)?;
    check_rho(rho)?;
    if rho.abs() == 1.0 {
        return Err(Error::DegenerateCorrelation);
    }
    if u.u2 <= rho * u.u1 || u.u2 <= 0.0 {
        return Err(Error::RegimeViolation(format!("needs ρ·u1 < u2, got ρ = {rho}, u = ({}, {})", u.u1, u.u2)));
    }
    let v = u.scaled(a_n);
    let p = bvn_upper_tail(v.u1, v.u2, rho)?.ln();
    Ok(2.0 * PI * a_n * a_n * (0.5 * a_n * a_n * u.mahalanobis(rho) + p).exp())
}

/// Limit of [`laplace_prefactor_check`] as `a_n → ∞`:
/// `(1−ρ²)^{3/2} / ((u1−ρu2)(u2−ρu1))`.
pub fn laplace_prefactor_limit(u: Threshold, rho: f64) -> f64 {
    let one_m = crate::gaussian::one_minus_rho_sq(rho);
    one_m * one_m.sqrt() / ((u.u1 - rho * u.u2) * (u.u2 - rho * u.u1))
}

/// `(1/a_n²) log P(X̄_n > a_n u) + I(u)`, the large-scale rate gap.
pub fn large_scale_gap(scaling: &ScalingSequence, u: Threshold, rho: f64) -> Result<f64> {
    let i = rate_i(u, rho)?;
    let t = exact_max_tail(scaling.n, scaling.level(u), rho)?;
    Ok(t.ln() / (scaling.a_n * scaling.a_n) + i.value)
}

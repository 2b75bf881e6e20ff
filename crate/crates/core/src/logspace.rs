//! Log-space probability arithmetic.
//!
//! Every tail probability in this crate is carried as its natural logarithm.
//! `f64::NEG_INFINITY` is the representation of `log(0)`.

use std::fmt;

/// Natural logarithm of a probability.
///
/// The wrapped value is `≤ 0`; `LogProb::ZERO` (negative infinity) stands for
/// a probability of exactly zero.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, serde::Serialize)]
#[serde(transparent)]
pub struct LogProb(f64);

impl LogProb {
    /// `log(0)`.
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    /// `log(1)`.
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log-probability. Values a few ulps above zero (rounding in a
    /// complement) are clamped to `0`; NaN and clearly positive values are
    /// rejected.
    pub fn new(value: f64) -> Option<LogProb> {
        if value.is_nan() || value > 1e-12 {
            return None;
        }
        Some(LogProb(value.min(0.0)))
    }

    /// Clamping constructor for values produced by this crate's own numerics.
    pub(crate) fn clamp(value: f64) -> LogProb {
        debug_assert!(!value.is_nan(), "NaN log-probability");
        LogProb(value.min(0.0))
    }

    pub fn from_prob(p: f64) -> Option<LogProb> {
        if !(0.0..=1.0).contains(&p) {
            return None;
        }
        Some(LogProb(p.ln()))
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `log(1 - p)`.
    pub fn complement(self) -> LogProb {
        LogProb::clamp(log1m_exp(self.0))
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `log(Σ exp(xᵢ))` over a slice; `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(exp(a) - exp(b))` for `a ≥ b`. Returns NaN when `b > a`.
#[inline]
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b > a {
        return f64::NAN;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + log1m_exp(b - a)
}

/// `log(1 - exp(x))` for `x ≤ 0`, switching between `ln(-expm1(x))` and
/// `ln_1p(-exp(x))` at `-ln 2`.
#[inline]
pub fn log1m_exp(x: f64) -> f64 {
    if x > 0.0 {
        return f64::NAN;
    }
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `log(1 - (1 - s)^n)` given `log n` and `log s`, for `0 ≤ s ≤ 1`.
///
/// This is the probability that at least one of `n` independent trials with
/// success probability `s` succeeds. Stays accurate when `n·s` is far below
/// the double-precision underflow threshold.
pub fn log1m_pow_complement(log_n: f64, log_s: f64) -> f64 {
    if log_s == f64::NEG_INFINITY || log_n == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if log_s >= 0.0 {
        return 0.0;
    }
    // x = -n·ln(1 - s) > 0
    let log_neg_ln1m = if log_s < -40.0 {
        // -ln(1-s) = s + s²/2 + …
        log_s + 0.5 * log_s.exp()
    } else {
        (-log1m_exp(log_s)).ln()
    };
    let log_x = log_n + log_neg_ln1m;
    if log_x < -40.0 {
        // 1 - e^{-x} = x(1 - x/2 + …)
        log_x - 0.5 * log_x.exp()
    } else {
        log1m_exp(-log_x.exp())
    }
}

/// Online log-sum-exp accumulator; the result depends only on the order in
/// which terms are pushed.
#[derive(Clone, Copy, Debug)]
pub struct LogSumAcc {
    max: f64,
    scaled: f64,
}

impl Default for LogSumAcc {
    fn default() -> Self {
        LogSumAcc { max: f64::NEG_INFINITY, scaled: 0.0 }
    }
}

impl LogSumAcc {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &LogSumAcc) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

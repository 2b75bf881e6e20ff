//! Closed-form rate functions for the component-wise maximum.
//!
//! All functions here work on standardized thresholds (`u / σ`); the
//! `CorrelationStructure`-taking entry points standardize first. Two scales
//! are covered:
//!
//! * right scale `a_n = √(log n)`, with limit `J(u)`;
//! * large scale `a_n ≫ √(log n)`, with limit `-I(u)` and the sharp
//!   asymptote `a_n^b n^{-c} e^{a_n² I(u)} P(·) → K`.
//!
//! Both are built from the constrained quadratic program
//! `min_{x ≥ u} ½ xᵀ Σ⁻¹ x`, whose solution has a three-case closed form
//! (two cones where one constraint is slack, and the corner `x = u`).

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::gaussian::{one_minus_rho_sq, CorrelationStructure};

/// Relative tolerance used to detect ties between competing branches.
pub const TIE_TOL: f64 = 1e-12;

/// Threshold vector `u = (u⁽¹⁾, u⁽²⁾)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Threshold {
    pub u1: f64,
    pub u2: f64,
}

impl Threshold {
    pub const fn new(u1: f64, u2: f64) -> Self {
        Threshold { u1, u2 }
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    pub fn is_positive(&self) -> bool {
        self.u1 > 0.0 && self.u2 > 0.0
    }

    /// Right-scale validity: `u > √2·σ` in both coordinates.
    pub fn is_right_scale_valid(&self, corr: &CorrelationStructure) -> bool {
        self.u1 > SQRT_2 * corr.sigma1 && self.u2 > SQRT_2 * corr.sigma2
    }

    pub fn scaled(&self, a: f64) -> Threshold {
        Threshold::new(a * self.u1, a * self.u2)
    }

    /// Coordinates swapped so that `u2 ≤ u1`.
    pub fn sorted(&self) -> Threshold {
        if self.u2 <= self.u1 {
            *self
        } else {
            Threshold::new(self.u2, self.u1)
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.u1 * self.u1 + self.u2 * self.u2
    }

    /// `(u1² − 2ρ u1 u2 + u2²)/(1−ρ²) = uᵀΣ⁻¹u` for unit variances.
    pub fn mahalanobis(&self, rho: f64) -> f64 {
        (self.u1 * self.u1 - 2.0 * rho * self.u1 * self.u2 + self.u2 * self.u2) / one_minus_rho_sq(rho)
    }
}

/// Which branch of a rate formula produced the value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum CaseLabel {
    /// `u2 ≤ ρ u1`: only the first constraint binds.
    ConeU2,
    /// `u1 ≤ ρ u2`: only the second constraint binds.
    ConeU1,
    /// Both maxima come from different samples.
    InteriorTwoIndex,
    /// Both maxima come from one sample (corner `x = u` of the QP).
    InteriorOneIndex,
    /// The two interior terms tie within [`TIE_TOL`].
    BoundaryTie,
    /// `u ≤ 0`: the unconstrained minimizer `x = 0` is feasible.
    Unconstrained,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::ConeU2 => "ConeU2",
            CaseLabel::ConeU1 => "ConeU1",
            CaseLabel::InteriorTwoIndex => "InteriorTwoIndex",
            CaseLabel::InteriorOneIndex => "InteriorOneIndex",
            CaseLabel::BoundaryTie => "BoundaryTie",
            CaseLabel::Unconstrained => "Unconstrained",
        }
    }

    pub fn is_cone(&self) -> bool {
        matches!(self, CaseLabel::ConeU1 | CaseLabel::ConeU2)
    }
}

/// Rate value, active branch and the QP minimizer (standardized coordinates).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RateResult {
    pub value: f64,
    pub case_label: CaseLabel,
    pub minimizer: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Scale {
    Right,
    Large,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Regime {
    TwoIndexDominant,
    OneIndexDominant,
    Boundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::TwoIndexDominant => "TwoIndexDominant",
            Regime::OneIndexDominant => "OneIndexDominant",
            Regime::Boundary => "Boundary",
        }
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

fn require_nondegenerate(rho: f64) -> Result<()> {
    crate::gaussian::check_rho(rho)?;
    if rho.abs() == 1.0 {
        return Err(Error::DegenerateCorrelation);
    }
    Ok(())
}

fn require_finite(u: Threshold) -> Result<()> {
    if u.u1.is_nan() || u.u2.is_nan() {
        return Err(Error::NanInput);
    }
    if !u.is_finite() {
        return Err(Error::InvalidThreshold(format!("non-finite threshold ({}, {})", u.u1, u.u2)));
    }
    Ok(())
}

/// `½ min_{x ≥ u} xᵀ Σ⁻¹ x` for unit variances, by active-set enumeration.
///
/// Boundaries between cases go to the cone branches (`≤`); the formulas
/// agree there, so only the label is affected.
pub(crate) fn standardized_qp(u: Threshold, rho: f64) -> RateResult {
    let Threshold { u1, u2 } = u;
    if u2 <= rho * u1 && u1 >= 0.0 {
        RateResult { value: 0.5 * u1 * u1, case_label: CaseLabel::ConeU2, minimizer: (u1, rho * u1) }
    } else if u1 <= rho * u2 && u2 >= 0.0 {
        RateResult { value: 0.5 * u2 * u2, case_label: CaseLabel::ConeU1, minimizer: (rho * u2, u2) }
    } else if u1 <= 0.0 && u2 <= 0.0 {
        RateResult { value: 0.0, case_label: CaseLabel::Unconstrained, minimizer: (0.0, 0.0) }
    } else {
        // Both multipliers (u1 − ρu2, u2 − ρu1)/(1−ρ²) are positive here.
        RateResult { value: 0.5 * u.mahalanobis(rho), case_label: CaseLabel::InteriorOneIndex, minimizer: (u1, u2) }
    }
}

/// Essential infimum `½ inf_{x > u} xᵀΣ⁻¹x` and its minimizer, after
/// standardizing `u` by the marginal scales.
pub fn essinf_qp(u: Threshold, corr: &CorrelationStructure) -> Result<RateResult> {
    require_finite(u)?;
    require_nondegenerate(corr.rho)?;
    Ok(standardized_qp(corr.standardize(u), corr.rho))
}

/// The two competing right-scale exponents for a standardized threshold:
/// `J₁ = 1 − essinf` (one sample exceeds both levels) and
/// `J₂ = 2 − ½‖u‖²` (two different samples).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RightScaleTerms {
    pub j1: f64,
    pub j2: f64,
    pub qp: RateResult,
}

pub fn right_scale_terms(u: Threshold, corr: &CorrelationStructure) -> Result<RightScaleTerms> {
    require_finite(u)?;
    require_nondegenerate(corr.rho)?;
    if !u.is_right_scale_valid(corr) {
        return Err(Error::InvalidThreshold(format!(
            "u ≤ √2·σ: ({}, {}) against σ = ({}, {})",
            u.u1, u.u2, corr.sigma1, corr.sigma2
        )));
    }
    let z = corr.standardize(u);
    let qp = standardized_qp(z, corr.rho);
    Ok(RightScaleTerms { j1: 1.0 - qp.value, j2: 2.0 - 0.5 * z.norm_sq(), qp })
}

/// Right-scale limit `lim (1/log n) log P(X̄_n > √(log n)·u) = J(u/σ)`.
pub fn rate_j(u: Threshold, corr: &CorrelationStructure) -> Result<RateResult> {
    let t = right_scale_terms(u, corr)?;
    let (value, case_label) = if t.qp.case_label.is_cone() {
        (t.j1, t.qp.case_label)
    } else if ties(t.j1, t.j2) {
        (t.j1.max(t.j2), CaseLabel::BoundaryTie)
    } else if t.j2 > t.j1 {
        (t.j2, CaseLabel::InteriorTwoIndex)
    } else {
        (t.j1, CaseLabel::InteriorOneIndex)
    };
    Ok(RateResult { value, case_label, minimizer: t.qp.minimizer })
}

/// Large-scale rate `I(u)` for a standardized, positive threshold.
pub fn rate_i(u: Threshold, rho: f64) -> Result<RateResult> {
    require_finite(u)?;
    require_nondegenerate(rho)?;
    if !u.is_positive() {
        return Err(Error::InvalidThreshold(format!("large-scale rate needs u > 0, got ({}, {})", u.u1, u.u2)));
    }
    let qp = standardized_qp(u, rho);
    if qp.case_label.is_cone() {
        return Ok(qp);
    }
    let two = u.norm_sq();
    let one = u.mahalanobis(rho);
    let (value, case_label) = if ties(two, one) {
        (0.5 * two.min(one), CaseLabel::BoundaryTie)
    } else if two < one {
        (0.5 * two, CaseLabel::InteriorTwoIndex)
    } else {
        (0.5 * one, CaseLabel::InteriorOneIndex)
    };
    Ok(RateResult { value, case_label, minimizer: qp.minimizer })
}

/// Row of the sharp-constant table that applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum KRow {
    /// Two-index regime, `u1 ≠ u2`.
    TwoIndex,
    /// Two-index regime, `u1 = u2`.
    TwoIndexSymmetric,
    /// One-index, strictly inside the cone `u2 < ρ u1`.
    Cone,
    /// One-index on the cone boundary `u2 = ρ u1`.
    ConeBoundary,
    /// One-index with the corner minimizer: a genuine two-dimensional
    /// Laplace integral.
    Laplace,
}

impl KRow {
    pub fn as_str(&self) -> &'static str {
        match self {
            KRow::TwoIndex => "TwoIndex",
            KRow::TwoIndexSymmetric => "TwoIndexSymmetric",
            KRow::Cone => "Cone",
            KRow::ConeBoundary => "ConeBoundary",
            KRow::Laplace => "Laplace",
        }
    }
}

/// Sharp large-scale asymptote
/// `a_n^b · n^{-c} · e^{a_n² I(u)} · P(Z̄_n > a_n u) → K`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SharpAsymptote {
    pub b: u8,
    pub c: u8,
    pub k: f64,
    pub rate: f64,
    pub row: KRow,
    pub case_label: CaseLabel,
}

/// Sharp constants for a standardized threshold with `u2 ≤ u1`.
///
/// | row | condition | K |
/// |---|---|---|
/// | two-index | `I = ½‖u‖²` | `1/(2π u1 u2)` |
/// | cone | `u2 < ρu1` | `1/(√(2π) u1)` |
/// | cone boundary | `u2 = ρu1` | `1/(2√(2π) u1)` |
/// | Laplace | `u2 > ρu1`, `I < ½‖u‖²` | `(1−ρ²)^{3/2}/(2π(u1−ρu2)(u2−ρu1))` |
///
/// with `b = 1 + [u2 > ρu1]` and `c = 1 + [I = ½‖u‖²]`. The two-index
/// constant counts all `n(n−1)` ordered index pairs, including when
/// `u1 = u2`. At an exact tie `‖u‖² = uᵀΣ⁻¹u` the two-index term wins by a
/// factor `n`, so the two-index row is reported with label `BoundaryTie`.
pub fn sharp_constants(u: Threshold, rho: f64) -> Result<SharpAsymptote> {
    require_finite(u)?;
    if u.u2 > u.u1 {
        return Err(Error::UnsortedThreshold { u1: u.u1, u2: u.u2 });
    }
    let i = rate_i(u, rho)?;
    let Threshold { u1, u2 } = u;
    let two_index = matches!(i.case_label, CaseLabel::InteriorTwoIndex | CaseLabel::BoundaryTie);
    let on_cone_boundary = ties(u2, rho * u1);
    let above_cone = u2 > rho * u1 && !on_cone_boundary;
    let sqrt_2pi = (2.0 * PI).sqrt();
    let (row, k) = if two_index {
        let row = if u1 == u2 { KRow::TwoIndexSymmetric } else { KRow::TwoIndex };
        (row, 1.0 / (2.0 * PI * u1 * u2))
    } else if on_cone_boundary {
        (KRow::ConeBoundary, 1.0 / (2.0 * sqrt_2pi * u1))
    } else if !above_cone {
        (KRow::Cone, 1.0 / (sqrt_2pi * u1))
    } else {
        let one_m = one_minus_rho_sq(rho);
        (KRow::Laplace, one_m * one_m.sqrt() / (2.0 * PI * (u1 - rho * u2) * (u2 - rho * u1)))
    };
    Ok(SharpAsymptote {
        b: 1 + u8::from(above_cone),
        c: 1 + u8::from(two_index),
        k,
        rate: i.value,
        row,
        case_label: i.case_label,
    })
}

/// Which index structure dominates the tail event.
///
/// Right scale: compares `J₂` against `J₁` (ties within [`TIE_TOL`] are
/// `Boundary`). Large scale: two distinct samples dominate exactly when
/// `I(u) = ½‖u‖²`, including the tie with the Mahalanobis term, where the
/// extra factor `n` of the two-index count decides.
pub fn regime_classify(u: Threshold, corr: &CorrelationStructure, scale: Scale) -> Result<Regime> {
    match scale {
        Scale::Right => {
            let t = right_scale_terms(u, corr)?;
            Ok(if ties(t.j1, t.j2) {
                Regime::Boundary
            } else if t.j2 > t.j1 {
                Regime::TwoIndexDominant
            } else {
                Regime::OneIndexDominant
            })
        }
        Scale::Large => {
            let i = rate_i(corr.standardize(u), corr.rho)?;
            Ok(match i.case_label {
                CaseLabel::InteriorTwoIndex | CaseLabel::BoundaryTie => Regime::TwoIndexDominant,
                _ => Regime::OneIndexDominant,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_corr(rho: f64) -> CorrelationStructure {
        CorrelationStructure::standard(rho).unwrap()
    }

    #[test]
    fn qp_independent_case() {
        let r = essinf_qp(Threshold::new(1.0, 2.0), &std_corr(0.0)).unwrap();
        assert!((r.value - 2.5).abs() < 1e-15);
        assert_eq!(r.minimizer, (1.0, 2.0));
    }

    #[test]
    fn qp_degenerate_is_rejected() {
        assert_eq!(essinf_qp(Threshold::new(1.0, 1.0), &std_corr(1.0)), Err(Error::DegenerateCorrelation));
    }

    #[test]
    fn qp_unconstrained_when_nonpositive() {
        let r = essinf_qp(Threshold::new(-1.0, -0.5), &std_corr(0.3)).unwrap();
        assert_eq!(r.case_label, CaseLabel::Unconstrained);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rate_j_rejects_threshold_below_sqrt2() {
        let err = rate_j(Threshold::new(1.0, 1.0), &std_corr(0.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidThreshold(_)));
        let err = rate_j(Threshold::new(2.0, 2.0), &CorrelationStructure::new(1.5, 1.0, 0.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InvalidThreshold(_)));
    }

    #[test]
    fn rate_j_examples() {
        let r = rate_j(Threshold::new(2.0, 2.0), &std_corr(0.5)).unwrap();
        assert!((r.value + 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(r.case_label, CaseLabel::InteriorOneIndex);

        let r = rate_j(Threshold::new(3.0, 1.6), &std_corr(0.9)).unwrap();
        assert!((r.value + 3.5).abs() < 1e-14);
        assert_eq!(r.case_label, CaseLabel::ConeU2);

        let r = rate_j(Threshold::new(2.0, 2.0), &std_corr(0.0)).unwrap();
        assert!((r.value + 2.0).abs() < 1e-14);
        assert_eq!(r.case_label, CaseLabel::InteriorTwoIndex);
    }

    #[test]
    fn rate_i_examples() {
        let r = rate_i(Threshold::new(1.0, 1.0), 0.5).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.case_label, CaseLabel::InteriorOneIndex);

        let r = rate_i(Threshold::new(1.0, 1.0), -0.5).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert_eq!(r.case_label, CaseLabel::InteriorTwoIndex);

        let r = rate_i(Threshold::new(2.0, 1.0), 0.8).unwrap();
        assert!((r.value - 2.0).abs() < 1e-15);
        assert_eq!(r.case_label, CaseLabel::ConeU2);

        assert!(rate_i(Threshold::new(1.0, 0.0), 0.2).is_err());
        assert_eq!(rate_i(Threshold::new(1.0, 1.0), -1.0), Err(Error::DegenerateCorrelation));
    }

    #[test]
    fn rate_i_ties_at_zero_correlation() {
        let r = rate_i(Threshold::new(2.0, 1.0), 0.0).unwrap();
        assert_eq!(r.case_label, CaseLabel::BoundaryTie);
        assert!((r.value - 2.5).abs() < 1e-15);
    }

    #[test]
    fn sharp_constants_rows() {
        let s = sharp_constants(Threshold::new(2.0, 1.0), -0.5).unwrap();
        assert_eq!((s.b, s.c, s.row), (2, 2, KRow::TwoIndex));
        assert!((s.k - 1.0 / (4.0 * PI)).abs() < 1e-15);

        let s = sharp_constants(Threshold::new(2.0, 2.0), -0.5).unwrap();
        assert_eq!((s.b, s.c, s.row), (2, 2, KRow::TwoIndexSymmetric));
        assert!((s.k - 1.0 / (8.0 * PI)).abs() < 1e-15);

        let s = sharp_constants(Threshold::new(2.0, 1.0), 0.8).unwrap();
        assert_eq!((s.b, s.c, s.row), (1, 1, KRow::Cone));
        assert!((s.k - 1.0 / (2.0 * (2.0 * PI).sqrt())).abs() < 1e-15);

        let s = sharp_constants(Threshold::new(2.0, 1.0), 0.5).unwrap();
        assert_eq!((s.b, s.c, s.row), (1, 1, KRow::ConeBoundary));
        assert!((s.k - 1.0 / (4.0 * (2.0 * PI).sqrt())).abs() < 1e-15);

        let s = sharp_constants(Threshold::new(2.0, 2.0), 0.5).unwrap();
        assert_eq!((s.b, s.c, s.row), (2, 1, KRow::Laplace));
        assert!((s.k - 0.75f64.powf(1.5) / (2.0 * PI)).abs() < 1e-15);
        assert!((s.rate - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sharp_constants_requires_sorted() {
        assert_eq!(sharp_constants(Threshold::new(1.0, 2.0), 0.5), Err(Error::UnsortedThreshold { u1: 1.0, u2: 2.0 }));
    }

    #[test]
    fn sharp_zero_correlation_is_two_index_tie() {
        let s = sharp_constants(Threshold::new(2.0, 1.0), 0.0).unwrap();
        assert_eq!(s.case_label, CaseLabel::BoundaryTie);
        assert_eq!((s.b, s.c, s.row), (2, 2, KRow::TwoIndex));
    }

    #[test]
    fn regime_examples() {
        let u = Threshold::new(2.0, 2.0);
        assert_eq!(regime_classify(u, &std_corr(0.0), Scale::Right).unwrap(), Regime::TwoIndexDominant);
        assert_eq!(regime_classify(u, &std_corr(0.5), Scale::Right).unwrap(), Regime::OneIndexDominant);
        assert_eq!(
            regime_classify(Threshold::new(2.0, 1.0), &std_corr(0.8), Scale::Large).unwrap(),
            Regime::OneIndexDominant
        );
        assert_eq!(
            regime_classify(Threshold::new(2.0, 1.0), &std_corr(-0.5), Scale::Large).unwrap(),
            Regime::TwoIndexDominant
        );
    }

    #[test]
    fn regime_right_boundary_on_exact_tie() {
        // ρ = 0.5, symmetric u: J₁ = 1 − u²/1.5, J₂ = 2 − u²; tie at u² = 3.
        let u = Threshold::new(3f64.sqrt(), 3f64.sqrt());
        assert_eq!(regime_classify(u, &std_corr(0.5), Scale::Right).unwrap(), Regime::Boundary);
        assert_eq!(rate_j(u, &std_corr(0.5)).unwrap().case_label, CaseLabel::BoundaryTie);
    }

    #[test]
    fn scale_invariance_of_rate_j() {
        let corr = CorrelationStructure::new(1.7, 0.4, 0.35).unwrap();
        let u = Threshold::new(4.0, 0.9);
        let scaled = rate_j(u, &corr).unwrap();
        let unit = rate_j(corr.standardize(u), &std_corr(0.35)).unwrap();
        assert_eq!(scaled, unit);
    }
}

//! Tail asymptotics for component-wise maxima of i.i.d. bivariate Gaussian
//! samples.
//!
//! For `X₁, …, X_n` i.i.d. centred bivariate normal with correlation `ρ`,
//! the component-wise maximum `X̄_n` exceeds a level `a_n·u` with
//! probability that decays at speed `log n` (right scale `a_n = √log n`) or
//! `a_n²` (large scale). This crate provides
//!
//! * [`rate`]: the closed-form quadratic program, rate functions `J`, `I`,
//!   the sharp constants `(b, c, K)` and the regime classifier;
//! * [`gaussian`]: log-space normal and bivariate-normal tails, sampling;
//! * [`oracle`]: exact finite-`n` tail probabilities and the
//!   inclusion-exclusion decomposition, valid for astronomically large `n`;
//! * [`monte_carlo`]: naive and importance-sampled estimators, and the
//!   index-coincidence probability;
//! * [`verify`]: the numerical checks that tie the above together;
//! * [`cli`]: the pieces behind the `bivex` binary.
//!
//! ```
//! use bivex::{rate_i, Threshold};
//! let r = rate_i(Threshold::new(1.0, 1.0), 0.5).unwrap();
//! assert!((r.value - 2.0 / 3.0).abs() < 1e-15);
//! ```

pub mod cli;
pub mod error;
pub mod gaussian;
pub mod logspace;
pub mod monte_carlo;
pub mod oracle;
pub mod quadrature;
pub mod rate;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use gaussian::{bvn_upper_tail, sample_bvn, std_normal_tail, CorrelationStructure};
pub use logspace::LogProb;
pub use monte_carlo::{
    estimate_tail_is, estimate_tail_naive, index_coincidence, sample_componentwise_max, IndexCoincidenceEstimate,
    McSettings, Method, TailEstimate,
};
pub use oracle::{
    error_term_bound, exact_max_tail, exists_single_index_tail, laplace_prefactor_check, sharp_ratio, union_sum,
    SampleSize, ScalingSequence, TailDecomposition,
};
pub use rate::{
    essinf_qp, rate_i, rate_j, regime_classify, sharp_constants, CaseLabel, RateResult, Regime, Scale, SharpAsymptote,
    Threshold,
};

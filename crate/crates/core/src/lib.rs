//! Matrix-free estimation of the spectral distribution of sample covariance
//! matrices and detection of spiked eigenvalues.
//!
//! A few Lanczos steps on `W = s·Y Yᵀ` give the leading Jacobi matrix of the
//! spectral measure at a probe vector. Its Cholesky factor settles to a
//! constant tail, so it is frozen there and the resulting semi-infinite
//! operator has a Stieltjes transform available in closed form up to a short
//! continued fraction. The support endpoints follow from the tail, and the
//! discrete poles outside the support count the spikes.
//!
//! ```
//! use spectral_spike::{
//!     detect_spikes, default_rule, AveragingConfig, Bulk, CovarianceOperator, DetectionConfig,
//!     EntryDistribution, Scale, SpikedModelSpec,
//! };
//!
//! let spec = SpikedModelSpec {
//!     n: 200,
//!     m: 400,
//!     bulk: Bulk::Constant(1.0),
//!     spikes: vec![8.0],
//!     distribution: EntryDistribution::Gaussian,
//!     seed: 1,
//! };
//! let op = CovarianceOperator::from_model(&spec, Scale::OneOverM).unwrap();
//! let report = detect_spikes(
//!     &op,
//!     &DetectionConfig::default(),
//!     &AveragingConfig::for_dimension(200, 1, 7),
//!     &default_rule(200),
//! )
//! .unwrap();
//! assert_eq!(report.r_hat, 1);
//! ```

// Comparisons are written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod jacobi;
pub mod lanczos;
pub mod operator;
pub mod poles;
pub mod reference;

pub use error::{Error, Result};
pub use estimate::{
    average_cholesky, detect_spikes, detection_report, estimate_asd, estimate_asd_with, estimate_svasd,
    estimate_svasd_with, Aggregation, AsdEstimate, AveragingConfig, DetectionConfig, DetectionReport,
    ProbeEstimate, ProbeRun, SvasdEstimate,
};
pub use jacobi::{
    cholesky_tridiag, density, estimate_spectrum, estimate_spectrum_with, extend, stieltjes_cf,
    support_endpoints, toeplitz_tail_transform, CholeskyFactor, ExtendedCholesky, SpectralEstimate,
};
pub use lanczos::{
    default_rule, lanczos_run, lanczos_with_basis, stopping_check, JacobiMatrix, LanczosResult, StopKind,
    StoppingRule,
};
pub use num_complex::Complex64;
pub use operator::{
    bulk_quantiles, load_data, make_operator, sample_probe, save_data, simulate, Bulk, CovarianceOperator,
    DataFormat, DataMatrix, EntryDistribution, LinearOperator, Scale, SpikedModelSpec,
};
pub use poles::{
    connection_coefficients, finite_section_poles, joukowski_map, pole_weights, poles_connection,
    poles_finite_section, symbol_roots, ConnectionMatrix, PoleBackend, PoleSet, ToeplitzPlusFiniteRank,
};

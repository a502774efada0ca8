//! Cholesky factors of Jacobi matrices, their constant-tail extensions, and the
//! Stieltjes transform of the resulting semi-infinite operator.
//!
//! For a lower-bidiagonal `L` with diagonal `α` and subdiagonal `β`, the Jacobi
//! matrix `J = L Lᵀ` has `J₀₀ = α₀²`, `Jᵢᵢ = αᵢ² + βᵢ₋₁²` and `Jᵢ,ᵢ₊₁ = αᵢβᵢ`.
//! Once `(αᵢ, βᵢ)` is constant the `(1,1)` resolvent entry solves a quadratic,
//! and the prefix is folded in with a finite continued fraction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lanczos::JacobiMatrix;
use crate::poles::{self, PoleBackend};

/// Lower-bidiagonal Cholesky factor `L` of a positive-definite Jacobi matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CholeskyFactor {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || beta.len() + 1 != alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len().saturating_sub(1),
                actual: beta.len(),
            });
        }
        if alpha.iter().chain(&beta).any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidSpec("Cholesky entries must be positive".into()));
        }
        Ok(Self { alpha, beta })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `L Lᵀ` as a Jacobi matrix.
    pub fn reconstruct(&self) -> JacobiMatrix {
        let n = self.len();
        let diag = (0..n)
            .map(|i| {
                let b = if i == 0 { 0.0 } else { self.beta[i - 1] };
                self.alpha[i] * self.alpha[i] + b * b
            })
            .collect();
        let off = (0..n - 1).map(|i| self.alpha[i] * self.beta[i]).collect();
        JacobiMatrix::new(diag, off).expect("products of positive entries are positive")
    }
}

/// Factors `J = L Lᵀ`, failing at the first non-positive pivot.
pub fn cholesky_tridiag(j: &JacobiMatrix) -> Result<CholeskyFactor> {
    let (a, b) = (j.diag(), j.offdiag());
    let n = a.len();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n.saturating_sub(1));
    let mut pivot = a[0];
    for i in 0..n {
        if !(pivot > 0.0) {
            return Err(Error::NotPositiveDefinite { index: i, pivot });
        }
        let ai = pivot.sqrt();
        alpha.push(ai);
        if i + 1 < n {
            let bi = b[i] / ai;
            beta.push(bi);
            pivot = a[i + 1] - bi * bi;
        }
    }
    CholeskyFactor::new(alpha, beta)
}

/// A semi-infinite lower-bidiagonal operator: a finite prefix of columns
/// followed by the constant pair `(ᾱ, β̄)` repeated forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedCholesky {
    prefix_alpha: Vec<f64>,
    prefix_beta: Vec<f64>,
    tail_alpha: f64,
    tail_beta: f64,
}

impl ExtendedCholesky {
    pub fn new(
        prefix_alpha: Vec<f64>,
        prefix_beta: Vec<f64>,
        tail_alpha: f64,
        tail_beta: f64,
    ) -> Result<Self> {
        if prefix_alpha.len() != prefix_beta.len() {
            return Err(Error::DimensionMismatch {
                expected: prefix_alpha.len(),
                actual: prefix_beta.len(),
            });
        }
        let all = prefix_alpha
            .iter()
            .chain(&prefix_beta)
            .chain([&tail_alpha, &tail_beta]);
        if all.into_iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidSpec(
                "extended Cholesky entries must be positive and finite".into(),
            ));
        }
        Ok(Self {
            prefix_alpha,
            prefix_beta,
            tail_alpha,
            tail_beta,
        })
    }

    /// The constant operator with `αᵢ = ᾱ`, `βᵢ = β̄` for all `i`.
    pub fn pure_tail(tail_alpha: f64, tail_beta: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), tail_alpha, tail_beta)
    }

    /// Number of prefix columns before the tail starts.
    pub fn prefix_len(&self) -> usize {
        self.prefix_alpha.len()
    }

    pub fn prefix_alpha(&self) -> &[f64] {
        &self.prefix_alpha
    }

    pub fn prefix_beta(&self) -> &[f64] {
        &self.prefix_beta
    }

    pub fn tail(&self) -> (f64, f64) {
        (self.tail_alpha, self.tail_beta)
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.prefix_alpha.get(i).copied().unwrap_or(self.tail_alpha)
    }

    pub fn beta(&self, i: usize) -> f64 {
        self.prefix_beta.get(i).copied().unwrap_or(self.tail_beta)
    }

    /// Leading `rows x rows` block of `L Lᵀ`.
    pub fn jacobi_truncation(&self, rows: usize) -> JacobiMatrix {
        assert!(rows >= 1);
        let diag = (0..rows)
            .map(|i| {
                let b = if i == 0 { 0.0 } else { self.beta(i - 1) };
                self.alpha(i).powi(2) + b * b
            })
            .collect();
        let off = (0..rows - 1).map(|i| self.alpha(i) * self.beta(i)).collect();
        JacobiMatrix::new(diag, off).expect("positive entries")
    }

    pub fn support(&self) -> (f64, f64) {
        support_endpoints(self)
    }

    pub fn transform(&self, z: Complex64) -> Result<Complex64> {
        stieltjes_cf(self, z)
    }
}

/// Freezes the last retained column as the tail.
///
/// With `n` columns, the tail is `(α_{n-2}, β_{n-2})` and the prefix holds
/// columns `0..n-2`; `α_{n-1}` is discarded.
pub fn extend(l: &CholeskyFactor) -> Result<ExtendedCholesky> {
    let n = l.len();
    if n < 2 {
        return Err(Error::TooShort(n));
    }
    ExtendedCholesky::new(
        l.alpha[..n - 2].to_vec(),
        l.beta[..n - 2].to_vec(),
        l.alpha[n - 2],
        l.beta[n - 2],
    )
}

/// `((ᾱ - β̄)², (ᾱ + β̄)²)`.
pub fn support_endpoints(ext: &ExtendedCholesky) -> (f64, f64) {
    let (a, b) = ext.tail();
    ((a - b).powi(2), (a + b).powi(2))
}

/// Stieltjes transform of the pure Toeplitz-tail operator with Cholesky
/// entries `(ᾱ, β̄)`, on the Herglotz branch.
///
/// Real `z` inside the support yields the boundary value from above.
pub fn toeplitz_tail_transform(tail_alpha: f64, tail_beta: f64, z: Complex64) -> Result<Complex64> {
    let (a2, b2) = (tail_alpha * tail_alpha, tail_beta * tail_beta);
    let gp = (tail_alpha + tail_beta).powi(2);
    let gm = (tail_alpha - tail_beta).powi(2);
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    let z = Complex64::new(z.re, im);
    let root = (Complex64::new(z.re - gp, im)).sqrt() * (Complex64::new(z.re - gm, im)).sqrt();

    let eval = |s: Complex64| {
        // (A + S)(A - S) = 4zβ̄², so m = (A + S)/(2zβ̄²) = 2/(A - S); use the
        // better-conditioned form.
        let base = a2 - z - b2;
        let (plus, minus) = (base + s, base - s);
        if plus.norm() >= minus.norm() {
            plus / (2.0 * b2 * z)
        } else {
            2.0 / minus
        }
    };
    let mut m = eval(root);
    let wrong_branch = (im > 0.0 && m.im < 0.0) || (im == 0.0 && z.re < 0.0 && m.re < 0.0);
    if wrong_branch {
        m = eval(-root);
    }
    if !(m.re.is_finite() && m.im.is_finite()) {
        return Err(Error::PoleHit {
            z: z.re,
            level: usize::MAX,
        });
    }
    Ok(m)
}

const POLE_HIT_RTOL: f64 = 1e-14;

/// `e₁ᵀ (L Lᵀ - z)⁻¹ e₁` for the extended operator.
///
/// Starts from the closed-form tail value and folds the prefix in with
/// `mᵢ = (1 + βᵢ² mᵢ₊₁) / (αᵢ² - z (1 + βᵢ² mᵢ₊₁))`, which is the two-level
/// Schur/Woodbury recursion with the inner fraction cleared.
pub fn stieltjes_cf(ext: &ExtendedCholesky, z: Complex64) -> Result<Complex64> {
    let (ta, tb) = ext.tail();
    let z = if z.im == 0.0 { Complex64::new(z.re, 0.0) } else { z };
    let mut m = toeplitz_tail_transform(ta, tb, z)?;
    for i in (0..ext.prefix_len()).rev() {
        let a2 = ext.prefix_alpha[i].powi(2);
        let b2 = ext.prefix_beta[i].powi(2);
        let num = 1.0 + b2 * m;
        let den = a2 - z * num;
        if z.im == 0.0 && den.norm() <= POLE_HIT_RTOL * (a2 + (z * num).norm()) {
            return Err(Error::PoleHit { z: z.re, level: i });
        }
        m = num / den;
    }
    Ok(m)
}

const NEGATIVE_DENSITY_TOL: f64 = 1e-12;

/// Absolutely continuous density `Im m(λ + i0)/π`; zero outside the support.
pub fn density(ext: &ExtendedCholesky, lambda: f64) -> Result<f64> {
    let (gm, gp) = support_endpoints(ext);
    if !(lambda > gm && lambda < gp) {
        return Ok(0.0);
    }
    let m = stieltjes_cf(ext, Complex64::new(lambda, 0.0))?;
    let value = m.im / std::f64::consts::PI;
    if value < -NEGATIVE_DENSITY_TOL {
        return Err(Error::NegativeDensity { lambda, value });
    }
    Ok(value.max(0.0))
}

/// Support, transform, and point masses of one extended operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub extension: ExtendedCholesky,
    /// Pole locations outside `[γ₋, γ₊]`, ascending.
    pub poles: Vec<f64>,
    /// Point mass at each pole.
    pub weights: Vec<f64>,
}

impl SpectralEstimate {
    pub fn transform(&self, z: Complex64) -> Result<Complex64> {
        stieltjes_cf(&self.extension, z)
    }

    pub fn density(&self, lambda: f64) -> Result<f64> {
        density(&self.extension, lambda)
    }
}

/// Bundles the support, transform and poles using the connection-coefficient
/// backend, falling back to a finite section if the weights cannot be formed.
pub fn estimate_spectrum(ext: &ExtendedCholesky) -> Result<SpectralEstimate> {
    estimate_spectrum_with(ext, PoleBackend::default())
}

pub fn estimate_spectrum_with(
    ext: &ExtendedCholesky,
    backend: PoleBackend,
) -> Result<SpectralEstimate> {
    let (gamma_minus, gamma_plus) = support_endpoints(ext);
    let finite = |size: Option<usize>| -> Result<poles::PoleSet> {
        let k = size.unwrap_or_else(|| poles::default_section_size(ext));
        poles::finite_section_poles(ext, k)
    };
    let set = match backend {
        PoleBackend::ConnectionCoefficients => match poles::poles_connection(ext) {
            Ok(set) => set,
            Err(Error::NonPositiveWeight { .. }) | Err(Error::NearMultipleRoot { .. }) => {
                finite(None)?
            }
            Err(e) => return Err(e),
        },
        PoleBackend::FiniteSection { section_size } => finite(section_size)?,
    };
    Ok(SpectralEstimate {
        gamma_minus,
        gamma_plus,
        extension: ext.clone(),
        poles: set.locations,
        weights: set.weights,
    })
}

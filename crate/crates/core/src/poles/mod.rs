//! Discrete eigenvalues of Toeplitz-plus-finite-rank Jacobi operators.
//!
//! Two backends are provided. The connection-coefficient route expresses the
//! orthonormal polynomials of `J` in the basis of those of the reference
//! Toeplitz operator; the Toeplitz part of that change of basis is a
//! polynomial symbol `c(z)` whose roots in the unit disk map to the
//! eigenvalues outside the continuous spectrum. The finite-section route
//! diagonalizes a long truncation of `J` directly.

mod companion;
mod tridiag;

pub use companion::polynomial_roots;
pub use tridiag::eigen_first_components;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{support_endpoints, ExtendedCholesky};
use crate::lanczos::JacobiMatrix;

/// Which pole finder to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleBackend {
    #[default]
    ConnectionCoefficients,
    /// Eigenvalues of a `K x K` truncation; `None` picks the default size.
    FiniteSection { section_size: Option<usize> },
}

/// Jacobi operator equal to the Toeplitz operator with diagonal `a` and
/// off-diagonal `b` from row `n` on.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzPlusFiniteRank {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    a: f64,
    b: f64,
}

impl ToeplitzPlusFiniteRank {
    /// `diag` and `offdiag` must have the same length `n ≥ 1`.
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        if diag.is_empty() || diag.len() != offdiag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len().max(1),
                actual: offdiag.len(),
            });
        }
        if !(b > 0.0) || offdiag.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidSpec("off-diagonals must be positive".into()));
        }
        if !a.is_finite() || diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("entries must be finite".into()));
        }
        Ok(Self { diag, offdiag, a, b })
    }

    /// `L Lᵀ` for an extended factor with `p` prefix columns; rows `0..=p`
    /// carry the perturbation.
    pub fn from_extension(ext: &ExtendedCholesky) -> Self {
        let n = ext.prefix_len() + 1;
        let (ta, tb) = ext.tail();
        let j = ext.jacobi_truncation(n + 1);
        Self {
            diag: j.diag()[..n].to_vec(),
            offdiag: j.offdiag()[..n].to_vec(),
            a: ta * ta + tb * tb,
            b: ta * tb,
        }
    }

    pub fn rank_rows(&self) -> usize {
        self.diag.len()
    }

    /// Number of leading rows whose entries differ from the reference.
    pub fn perturbed_rows(&self) -> usize {
        let n = self.diag.len();
        if self.offdiag[n - 1] == self.b {
            n
        } else {
            n + 1
        }
    }

    pub fn tail(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag.get(i).copied().unwrap_or(self.a)
    }

    pub fn offdiag(&self, i: usize) -> f64 {
        self.offdiag.get(i).copied().unwrap_or(self.b)
    }

    /// Continuous spectrum `[a - 2b, a + 2b]`.
    pub fn support(&self) -> (f64, f64) {
        (self.a - 2.0 * self.b, self.a + 2.0 * self.b)
    }

    pub fn truncation(&self, rows: usize) -> JacobiMatrix {
        let d = (0..rows).map(|i| self.diag(i)).collect();
        let o = (0..rows.saturating_sub(1)).map(|i| self.offdiag(i)).collect();
        JacobiMatrix::new(d, o).expect("valid entries")
    }
}

/// Leading block of the connection matrix `C` with `P_j = Σᵢ c_{ij} Q_i`,
/// where `P` and `Q` are the orthonormal polynomials of `J` and of its
/// reference Toeplitz operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    size: usize,
    entries: Vec<f64>,
    symbol: Vec<f64>,
}

impl ConnectionMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    /// `c_{ij}`, zero below the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    /// Coefficients `t_k` of the Toeplitz symbol `c(z) = Σ t_k zᵏ`, untrimmed.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }
}

/// Builds `C` column by column from
/// `b̃_j c_{i,j+1} = b c_{i-1,j} + (a - ã_j) c_{i,j} + b c_{i+1,j} - b̃_{j-1} c_{i,j-1}`.
///
/// With `n` one past the last perturbed row (an off-diagonal perturbation at
/// `n - 1` counts), rows and columns `0..=3n` are stored, enough to read the
/// symbol `t_k = c_{n, n+k}` for `k < 2n` from the Toeplitz wedge.
pub fn connection_coefficients(j: &ToeplitzPlusFiniteRank) -> Result<ConnectionMatrix> {
    let n = j.perturbed_rows();
    let size = 3 * n + 1;
    let (a, b) = j.tail();
    let mut c = vec![0.0; size * size];
    let at = |c: &[f64], i: isize, col: isize| -> f64 {
        if i < 0 || col < 0 || i as usize >= size {
            0.0
        } else {
            c[i as usize * size + col as usize]
        }
    };
    c[0] = 1.0;
    for col in 0..size - 1 {
        let (aj, bj) = (j.diag(col), j.offdiag(col));
        let bprev = if col == 0 { 0.0 } else { j.offdiag(col - 1) };
        let cc = col as isize;
        for i in 0..=(col + 1) {
            let ii = i as isize;
            let v = (b * at(&c, ii - 1, cc)
                + (a - aj) * at(&c, ii, cc)
                + b * at(&c, ii + 1, cc)
                - bprev * at(&c, ii, cc - 1))
                / bj;
            if !v.is_finite() {
                return Err(Error::InvalidSpec("connection coefficients overflowed".into()));
            }
            c[i * size + col + 1] = v;
        }
    }
    let symbol = (0..2 * n).map(|k| c[n * size + n + k]).collect();
    Ok(ConnectionMatrix { size, entries: c, symbol })
}

const TRIM_RTOL: f64 = 1e-12;
const DISK_MARGIN: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-8;
const MIN_ROOT_GAP: f64 = 1e-10;

/// Drops trailing coefficients with `|t| ≤ 1e-12 max|t|`.
pub fn trim_symbol(sym: &[f64]) -> Result<Vec<f64>> {
    let max = sym.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(max > 0.0) {
        return Err(Error::DegeneratePolynomial);
    }
    let keep = sym.iter().rposition(|x| x.abs() > TRIM_RTOL * max).unwrap_or(0);
    Ok(sym[..=keep].to_vec())
}

/// Real roots of the symbol strictly inside the unit disk, ascending.
pub fn symbol_roots(sym: &[f64]) -> Result<Vec<f64>> {
    let t = trim_symbol(sym)?;
    let mut roots: Vec<f64> = polynomial_roots(&t)?
        .into_iter()
        .filter(|z| z.norm() < 1.0 - DISK_MARGIN && z.im.abs() <= IMAG_TOL)
        .map(|z| z.re)
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}

/// `M(J(z))` with `J(z) = (z + 1/z)/2` and `M` the affine map of `[-1, 1]`
/// onto `[γ₋, γ₊]`.
pub fn joukowski_map(z: f64, gamma_minus: f64, gamma_plus: f64) -> Result<f64> {
    if z == 0.0 || !(z.abs() < 1.0) {
        return Err(Error::JoukowskiDomain(z));
    }
    let jz = 0.5 * (z + 1.0 / z);
    Ok(0.5 * (gamma_plus + gamma_minus) + jz * 0.5 * (gamma_plus - gamma_minus))
}

fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, x| acc * z + x)
}

/// Point masses `(z - z⁻¹)² / (z c′(z) c(z⁻¹))` at the symbol roots.
///
/// Evaluated as `(z² - 1)² z^{d-3} / (c′(z) ĉ(z))` with `ĉ(z) = z^d c(1/z)`
/// the reversed polynomial, which avoids `1/z` blow-up for small roots.
pub fn pole_weights(sym: &[f64], roots: &[f64]) -> Result<Vec<f64>> {
    if roots.is_empty() {
        return Ok(Vec::new());
    }
    let t = trim_symbol(sym)?;
    for w in roots.windows(2) {
        if (w[1] - w[0]).abs() <= MIN_ROOT_GAP {
            return Err(Error::NearMultipleRoot { a: w[0], b: w[1] });
        }
    }
    let d = t.len() - 1;
    let deriv: Vec<f64> = t.iter().enumerate().skip(1).map(|(k, x)| k as f64 * x).collect();
    let rev: Vec<f64> = t.iter().rev().cloned().collect();
    roots
        .iter()
        .map(|&z| {
            let w = (z * z - 1.0).powi(2) * z.powi(d as i32 - 3) / (horner(&deriv, z) * horner(&rev, z));
            if w.is_finite() && w > 0.0 {
                Ok(w)
            } else {
                Err(Error::NonPositiveWeight { root: z, weight: w })
            }
        })
        .collect()
}

/// Pole locations (ascending) and their masses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PoleSet {
    pub locations: Vec<f64>,
    pub weights: Vec<f64>,
}

fn sorted_set(mut pairs: Vec<(f64, f64)>) -> PoleSet {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (locations, weights) = pairs.into_iter().unzip();
    PoleSet { locations, weights }
}

pub fn poles_of_operator(j: &ToeplitzPlusFiniteRank) -> Result<PoleSet> {
    let cm = connection_coefficients(j)?;
    let roots = symbol_roots(cm.symbol())?;
    let weights = pole_weights(cm.symbol(), &roots)?;
    let (gm, gp) = j.support();
    let pairs = roots
        .iter()
        .zip(weights)
        .map(|(&z, w)| Ok((joukowski_map(z, gm, gp)?, w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(sorted_set(pairs))
}

/// Connection-coefficient backend on `L Lᵀ`.
pub fn poles_connection(ext: &ExtendedCholesky) -> Result<PoleSet> {
    poles_of_operator(&ToeplitzPlusFiniteRank::from_extension(ext))
}

/// `max(2000, 20 n)` with `n` the number of perturbed rows.
pub fn default_section_size(ext: &ExtendedCholesky) -> usize {
    2000.max(20 * (ext.prefix_len() + 1))
}

fn check_section_size(ext: &ExtendedCholesky, k: usize) -> Result<()> {
    let n = ext.prefix_len() + 1;
    if k < n + 50 {
        return Err(Error::InvalidConfig(format!(
            "section size {k} must be at least {} for {n} perturbed rows",
            n + 50
        )));
    }
    Ok(())
}

/// Eigenvalues of the `K x K` truncation above `γ₊ + margin`, ascending.
pub fn poles_finite_section(ext: &ExtendedCholesky, k: usize, margin: f64) -> Result<Vec<f64>> {
    check_section_size(ext, k)?;
    let (_, gp) = support_endpoints(ext);
    Ok(eigen_first_components(&ext.jacobi_truncation(k))?
        .into_iter()
        .map(|(l, _)| l)
        .filter(|l| *l > gp + margin)
        .collect())
}

/// Truncation eigenvalues outside `[γ₋, γ₊]` on both sides, with the squared
/// first eigenvector components as masses.
pub fn finite_section_poles(ext: &ExtendedCholesky, k: usize) -> Result<PoleSet> {
    check_section_size(ext, k)?;
    let (gm, gp) = support_endpoints(ext);
    // Bulk eigenvalues of a truncation sit O(1/K²) inside the support; the
    // guard only absorbs roundoff.
    let guard = 1e-10 * (gp - gm).max(f64::MIN_POSITIVE);
    let pairs = eigen_first_components(&ext.jacobi_truncation(k))?
        .into_iter()
        .filter(|(l, _)| *l > gp + guard || *l < gm - guard)
        .collect();
    Ok(sorted_set(pairs))
}

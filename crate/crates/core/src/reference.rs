//! Closed-form and fixed-point oracles for validation.
//!
//! Nothing in the estimation pipeline calls into this module; it exists so
//! tests, the CLI and the demo can compare estimates against known laws.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::ExtendedCholesky;

/// Population spectrum of a deformed Marchenko–Pastur model: the `N` bulk
/// eigenvalues of `Σ₀` and the sample size `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformedMPModel {
    sigma: Vec<f64>,
    m: usize,
}

impl DeformedMPModel {
    pub fn new(sigma: Vec<f64>, m: usize) -> Result<Self> {
        if sigma.is_empty() || m == 0 {
            return Err(Error::InvalidSpec("model needs N ≥ 1 and M ≥ 1".into()));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidSpec("population eigenvalues must be positive".into()));
        }
        Ok(Self { sigma, m })
    }

    /// `N` copies of `σ²`.
    pub fn constant(sigma2: f64, n: usize, m: usize) -> Result<Self> {
        Self::new(vec![sigma2; n], m)
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.sigma.len() as f64 / self.m as f64
    }

    fn sigma_max(&self) -> f64 {
        self.sigma.iter().cloned().fold(0.0, f64::max)
    }

    fn inv_m(&self) -> f64 {
        1.0 / self.m as f64
    }
}

/// `f(m) = -1/m + (1/M) Σₖ 1/(m + σₖ⁻¹)`, whose inverse is the Stieltjes
/// transform of the `M x M` companion matrix `(1/M) Yᵀ Y`.
pub fn f_dmp(model: &DeformedMPModel, m: Complex64) -> Result<Complex64> {
    if m.norm() == 0.0 {
        return Err(Error::PoleOfF("m = 0".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for s in &model.sigma {
        let d = m + 1.0 / s;
        if d.norm() <= 1e-300 {
            return Err(Error::PoleOfF(format!("m = -1/{s}")));
        }
        acc += 1.0 / d;
    }
    Ok(-1.0 / m + acc * model.inv_m())
}

fn f_dmp_derivative(model: &DeformedMPModel, m: Complex64) -> Complex64 {
    let acc: Complex64 = model.sigma.iter().map(|s| 1.0 / (m + 1.0 / s).powi(2)).sum();
    1.0 / (m * m) - acc * model.inv_m()
}

const NEWTON_CAP: usize = 200;

/// Solves `z = f(m)` with `Im m > 0` by damped Newton from `m₀ = -1/z`.
///
/// A step is halved while it would leave the upper half-plane or fail to
/// reduce the residual. If the direct solve stalls, which happens close to
/// the real axis, the root is tracked from `Im z = max(1, |z|)` down to the
/// target along a geometric path.
pub fn m_dmp_solve(model: &DeformedMPModel, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidConfig("m_dmp_solve needs Im z > 0".into()));
    }
    if let Ok(m) = newton(model, z, -1.0 / z) {
        return Ok(m);
    }
    let top = z.norm().max(1.0);
    if top <= z.im {
        return Err(Error::NoConvergence { iterations: NEWTON_CAP });
    }
    let levels = ((top / z.im).ln() / 2f64.ln()).ceil() as usize;
    let mut m = -1.0 / Complex64::new(z.re, top);
    for k in 0..=levels {
        let y = (top * 0.5f64.powi(k as i32)).max(z.im);
        m = newton(model, Complex64::new(z.re, y), m)?;
    }
    newton(model, z, m)
}

fn newton(model: &DeformedMPModel, z: Complex64, start: Complex64) -> Result<Complex64> {
    let tol = 1e-12 * (1.0 + z.norm());
    let stalled = Error::NoConvergence { iterations: NEWTON_CAP };
    let mut m = start;
    let mut res = f_dmp(model, m)? - z;
    for _ in 0..NEWTON_CAP {
        if res.norm() <= tol {
            return Ok(m);
        }
        let step = res / f_dmp_derivative(model, m);
        let mut t = 1.0;
        loop {
            let cand = m - step * t;
            if cand.im > 0.0 {
                if let Ok(v) = f_dmp(model, cand) {
                    let r = v - z;
                    if r.norm() < res.norm() {
                        m = cand;
                        res = r;
                        break;
                    }
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(stalled);
            }
        }
    }
    if res.norm() <= tol {
        Ok(m)
    } else {
        Err(stalled)
    }
}

/// The critical point `m*` of `f` on `(-1/σ_max, 0)`; `f(m*)` is the right
/// edge of the companion law and `-1/m*` the detectability threshold.
pub fn critical_point(model: &DeformedMPModel) -> f64 {
    // f′ is increasing on the interval, from -∞ to +∞.
    let fp = |m: f64| f_dmp_derivative(model, Complex64::new(m, 0.0)).re;
    let (mut lo, mut hi) = (-1.0 / model.sigma_max(), 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fp(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * lo.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Spikes above this value produce outliers.
pub fn bbp_threshold(model: &DeformedMPModel) -> f64 {
    -1.0 / critical_point(model)
}

/// Right edge of the limiting spectrum of `W`.
pub fn upper_edge(model: &DeformedMPModel) -> f64 {
    f_dmp(model, Complex64::new(critical_point(model), 0.0))
        .expect("critical point is off the poles")
        .re
}

/// Limiting position of the outlier produced by a spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierLocation {
    /// `f(-1/σ̃)`; only meaningful as an eigenvalue location when supercritical.
    pub location: f64,
    pub supercritical: bool,
}

/// `f(-1/σ̃)`, flagged subcritical when `σ̃` does not exceed the threshold by
/// a relative margin of `1e-9`.
pub fn outlier_location(model: &DeformedMPModel, spike: f64) -> Result<OutlierLocation> {
    if !(spike > 0.0) {
        return Err(Error::InvalidSpec(format!("spike {spike} must be positive")));
    }
    let location = f_dmp(model, Complex64::new(-1.0 / spike, 0.0))?.re;
    let supercritical = spike > bbp_threshold(model) * (1.0 + 1e-9);
    Ok(OutlierLocation {
        location,
        supercritical,
    })
}

/// `(σ²(1-√c)², σ²(1+√c)²)`.
pub fn mp_edges(sigma2: f64, c: f64) -> (f64, f64) {
    (sigma2 * (1.0 - c.sqrt()).powi(2), sigma2 * (1.0 + c.sqrt()).powi(2))
}

/// Marchenko–Pastur density with variance `σ²` and ratio `c ∈ (0, 1]`.
pub fn mp_density(sigma2: f64, c: f64, lambda: f64) -> f64 {
    let (gm, gp) = mp_edges(sigma2, c);
    if !(lambda > gm && lambda < gp) {
        return 0.0;
    }
    ((gp - lambda) * (lambda - gm)).sqrt() / (2.0 * std::f64::consts::PI * c * sigma2 * lambda)
}

/// Herglotz branch of `(σ²(1-c) - z + √(z-γ₊)√(z-γ₋)) / (2cσ²z)`.
pub fn mp_stieltjes(sigma2: f64, c: f64, z: Complex64) -> Complex64 {
    let (gm, gp) = mp_edges(sigma2, c);
    let root = (z - gp).sqrt() * (z - gm).sqrt();
    let eval = |s: Complex64| (sigma2 * (1.0 - c) - z + s) / (2.0 * c * sigma2 * z);
    let m = eval(root);
    if z.im > 0.0 && m.im < 0.0 {
        eval(-root)
    } else {
        m
    }
}

/// Closed-form vector spectral distribution of `W` for `Σ = diag(ℓ, 1, …)`
/// probed at `e₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleSpike {
    pub ell: f64,
    pub c: f64,
}

impl SingleSpike {
    pub fn new(ell: f64, c: f64) -> Result<Self> {
        if !(ell > 1.0) || !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidSpec(format!("need ℓ > 1 and c ∈ (0,1], got ℓ={ell}, c={c}")));
        }
        Ok(Self { ell, c })
    }

    pub fn supercritical(&self) -> bool {
        self.ell > 1.0 + self.c.sqrt()
    }

    /// The extended Cholesky factor whose transform this is: one prefix
    /// column `(√ℓ, √c)` ahead of the white-noise tail `(1, √c)`.
    pub fn extension(&self) -> ExtendedCholesky {
        ExtendedCholesky::new(vec![self.ell.sqrt()], vec![self.c.sqrt()], 1.0, self.c.sqrt())
            .expect("positive entries")
    }

    /// `ℓ + ℓc/(ℓ-1)`.
    pub fn x0(&self) -> f64 {
        self.ell + self.ell * self.c / (self.ell - 1.0)
    }

    /// Mass of the atom at `x₀`, zero when subcritical.
    pub fn w0(&self) -> f64 {
        if !self.supercritical() {
            return 0.0;
        }
        let l1 = self.ell - 1.0;
        (l1 * l1 - self.c) / (l1 * (l1 + self.c))
    }

    pub fn transform(&self, z: Complex64) -> Complex64 {
        let (ell, c) = (self.ell, self.c);
        let (cm, cp) = mp_edges(1.0, c);
        let den = 2.0 * z * ((1.0 - ell) * z + ell * (ell - 1.0 + c));
        let eval = |s: Complex64| (-2.0 * z + ell * (1.0 - c + z + s)) / den;
        let root = (z - cp).sqrt() * (z - cm).sqrt();
        let m = eval(root);
        if z.im > 0.0 && m.im < 0.0 {
            eval(-root)
        } else {
            m
        }
    }

    pub fn density(&self, lambda: f64) -> f64 {
        let (cm, cp) = mp_edges(1.0, self.c);
        if !(lambda > cm && lambda < cp) {
            return 0.0;
        }
        (self.transform(Complex64::new(lambda, 1e-300)).im / std::f64::consts::PI).max(0.0)
    }
}

/// Unnormalized bulk population density on `[0.1, 4]` with a skewed,
/// non-MP shape; feed to `bulk_quantiles` to build a population table.
pub fn skewed_bulk_density(x: f64) -> f64 {
    if !(x > 0.1 && x < 4.0) {
        return 0.0;
    }
    (2.0 * (3.5 - x).powi(3) + x) / (4.5 - x).powi(2) * (4.0 - x).sqrt() * (x - 0.1).sqrt()
}

pub const SKEWED_BULK_SUPPORT: (f64, f64) = (0.1, 4.0);

/// `max |ρ̂(x)/√((γ̂₊-x)(x-γ̂₋)) - ρ(x)/√((γ₊-x)(x-γ₋))|` over a uniform grid
/// of `points` nodes on `[γ̂₋ + inset, γ̂₊ - inset]`, which factors out the
/// square-root edges before comparing.
#[allow(clippy::too_many_arguments)]
pub fn weighted_density_error(
    estimate: impl Fn(f64) -> f64,
    est_edges: (f64, f64),
    truth: impl Fn(f64) -> f64,
    true_edges: (f64, f64),
    inset: f64,
    points: usize,
) -> f64 {
    let (lo, hi) = (est_edges.0 + inset, est_edges.1 - inset);
    if !(hi > lo) || points < 2 {
        return f64::NAN;
    }
    let weight = |x: f64, (a, b): (f64, f64)| {
        let w = ((b - x) * (x - a)).sqrt();
        if w > 0.0 {
            w
        } else {
            f64::NAN
        }
    };
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let e = estimate(x) / weight(x, est_edges);
            let t = truth(x) / weight(x, true_edges);
            (e - t).abs()
        })
        .fold(0.0, f64::max)
}

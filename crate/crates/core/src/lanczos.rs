//! Lanczos tridiagonalization with full reorthogonalization.
//!
//! Produces the Jacobi matrix of the probe's eigenvector spectral measure,
//! stopping when the recurrence coefficients flatten out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{dot, norm2, LinearOperator};

/// Finite symmetric tridiagonal matrix with positive off-diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len().saturating_sub(1),
                actual: offdiag.len(),
            });
        }
        if let Some(b) = offdiag.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidSpec(format!(
                "Jacobi off-diagonal entries must be positive, got {b}"
            )));
        }
        if diag.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidSpec("Jacobi diagonal must be finite".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            out[i * n + i] = self.diag[i];
            if i + 1 < n {
                out[i * n + i + 1] = self.offdiag[i];
                out[(i + 1) * n + i] = self.offdiag[i];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopKind {
    /// Stop after exactly `n` steps.
    FixedSteps { n: usize },
    /// Sample stddev of the last `q` diagonal and off-diagonal entries below `tol`.
    TailStddev { q: usize, tol: f64 },
    /// Two windows of length `q` separated by `gap` entries: means within
    /// `mean_tol` and all four window stddevs below `std_tol`.
    TwoWindow {
        q: usize,
        gap: usize,
        mean_tol: f64,
        std_tol: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub kind: StopKind,
    pub max_steps: usize,
}

impl StoppingRule {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.max_steps == 0 || self.max_steps > dim {
            return bad(format!(
                "max_steps {} must lie in 1..={dim}",
                self.max_steps
            ));
        }
        match self.kind {
            StopKind::FixedSteps { n: 0 } => bad("fixed step count must be positive".into()),
            StopKind::TailStddev { q, tol } if q == 0 || !(tol > 0.0) => {
                bad(format!("tail_stddev needs q >= 1 and tol > 0, got q={q}, tol={tol}"))
            }
            StopKind::TwoWindow {
                q,
                mean_tol,
                std_tol,
                ..
            } if q == 0 || !(mean_tol > 0.0) || !(std_tol > 0.0) => bad(format!(
                "two_window needs q >= 1 and positive tolerances, got q={q}, tolerances ({mean_tol}, {std_tol})"
            )),
            _ => Ok(()),
        }
    }
}

/// The operating point that works across the test problems: two windows with
/// `q = ⌊½ ln N⌋`, tolerances `3/√N` and a cap of `⌈max(6 ln N + 24, √N)⌉`.
pub fn default_rule(n: usize) -> StoppingRule {
    let nf = n.max(2) as f64;
    let q = ((0.5 * nf.ln()).floor() as usize).max(1);
    let tol = 3.0 / nf.sqrt();
    let cap = (6.0 * nf.ln() + 24.0).max(nf.sqrt()).ceil() as usize;
    StoppingRule {
        kind: StopKind::TwoWindow {
            q,
            gap: q,
            mean_tol: tol,
            std_tol: tol,
        },
        max_steps: cap.min(n),
    }
}

fn mean(s: &[f64]) -> f64 {
    s.iter().sum::<f64>() / s.len() as f64
}

/// Sample standard deviation; zero for a single entry.
fn sample_std(s: &[f64]) -> f64 {
    if s.len() < 2 {
        return 0.0;
    }
    let m = mean(s);
    (s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt()
}

/// Whether `rule` fires on the diagonal `a` and off-diagonal `b` so far.
pub fn stopping_check(a: &[f64], b: &[f64], rule: &StoppingRule) -> bool {
    match rule.kind {
        StopKind::FixedSteps { n } => a.len() >= n,
        StopKind::TailStddev { q, tol } => [a, b]
            .iter()
            .all(|s| s.len() >= q && sample_std(&s[s.len() - q..]) < tol),
        StopKind::TwoWindow {
            q,
            gap,
            mean_tol,
            std_tol,
        } => [a, b].iter().all(|s| {
            let len = s.len();
            if len < 2 * q + gap {
                return false;
            }
            let recent = &s[len - q..];
            let earlier = &s[len - 2 * q - gap..len - q - gap];
            (mean(recent) - mean(earlier)).abs() < mean_tol
                && sample_std(recent) < std_tol
                && sample_std(earlier) < std_tol
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanczosResult {
    pub jacobi: JacobiMatrix,
    pub steps_taken: usize,
    pub breakdown: bool,
    /// The last off-diagonal norm computed, not stored in `jacobi`.
    pub residual_offdiag: f64,
}

const BREAKDOWN_RTOL: f64 = 1e-13;

/// Runs Lanczos on `(op, probe)` until `rule` fires, the step cap is hit, or
/// the Krylov space becomes invariant.
pub fn lanczos_run(
    op: &impl LinearOperator,
    probe: &[f64],
    rule: &StoppingRule,
) -> Result<LanczosResult> {
    lanczos_with_basis(op, probe, rule).map(|(r, _)| r)
}

/// Like [`lanczos_run`] but also returns the orthonormal basis `q_1..q_n`.
pub fn lanczos_with_basis(
    op: &impl LinearOperator,
    probe: &[f64],
    rule: &StoppingRule,
) -> Result<(LanczosResult, Vec<Vec<f64>>)> {
    let dim = op.dim();
    if probe.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: probe.len(),
        });
    }
    let norm = norm2(probe);
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitProbe { norm });
    }
    rule.validate(dim)?;

    let mut basis: Vec<Vec<f64>> = vec![probe.to_vec()];
    let mut a: Vec<f64> = Vec::with_capacity(rule.max_steps);
    let mut b: Vec<f64> = Vec::with_capacity(rule.max_steps);
    let mut w = vec![0.0; dim];
    let mut norm_est = 0.0f64;
    let mut max_b = 0.0f64;

    loop {
        let j = a.len();
        let q = &basis[j];
        op.apply_into(q, &mut w)?;
        if j > 0 {
            let prev = &basis[j - 1];
            let bp = b[j - 1];
            w.iter_mut().zip(prev).for_each(|(wi, pi)| *wi -= bp * pi);
        }
        let aj = dot(&w, q);
        w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= aj * qi);
        a.push(aj);

        // Two passes of classical Gram-Schmidt against the stored basis.
        for _ in 0..2 {
            let coeffs: Vec<f64> = basis.iter().map(|qk| dot(qk, &w)).collect();
            for (c, qk) in coeffs.iter().zip(&basis) {
                w.iter_mut().zip(qk).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let bj = norm2(&w);
        max_b = max_b.max(bj);
        if j == 0 {
            norm_est = aj.abs();
        }
        let scale = norm_est + 2.0 * max_b;
        let steps = a.len();

        let finish = |breakdown: bool, a: Vec<f64>, b: Vec<f64>, basis: Vec<Vec<f64>>| {
            let jacobi = JacobiMatrix::new(a, b)?;
            Ok((
                LanczosResult {
                    jacobi,
                    steps_taken: steps,
                    breakdown,
                    residual_offdiag: bj,
                },
                basis,
            ))
        };

        if bj <= BREAKDOWN_RTOL * scale {
            return finish(true, a, b, basis);
        }
        if steps >= rule.max_steps || stopping_check(&a, &b, rule) {
            return finish(false, a, b, basis);
        }
        b.push(bj);
        basis.push(w.iter().map(|x| x / bj).collect());
    }
}

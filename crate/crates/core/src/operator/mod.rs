//! Sample-covariance operators, data ingestion, synthetic models and probes.

mod data;
pub mod rng;
mod simulate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use data::{
    decode_binary, encode_binary, encode_csv, load_data, parse_csv, save_data, DataFormat,
    DataMatrix,
};
pub use simulate::{bulk_quantiles, simulate, Bulk, EntryDistribution, SpikedModelSpec};

use crate::error::{Error, Result};
use rng::Stream;

/// A symmetric linear operator available only through matrix-vector products.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `W v` into `out`. Both slices must have length `dim()`.
    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()>;

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }
}

/// Normalization applied to `Y Yᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scale {
    /// `W = Y Yᵀ`.
    Raw,
    /// `W = (1/M) Y Yᵀ`.
    #[default]
    #[serde(rename = "1/m")]
    OneOverM,
}

#[derive(Debug, Clone)]
enum Backing {
    /// `samples[k*rows..(k+1)*rows]` is column `k` of `Y`.
    Data { rows: usize, samples: Vec<f64>, factor: f64 },
    Explicit { dim: usize, entries: Vec<f64> },
}

/// Read-only covariance operator `v ↦ W v`.
///
/// The data-backed form never materializes `W`. `Y` is stored one sample
/// (column) at a time, and each product is a single pass
/// `W v = s·Σ_k y_k (y_kᵀ v)` with every `y_k` read once from memory.
#[derive(Debug, Clone)]
pub struct CovarianceOperator {
    backing: Backing,
}

/// Samples handled by one parallel task. Partial sums are added in task
/// order, so the output does not depend on thread scheduling.
const SAMPLE_BLOCK: usize = 256;

/// Dot product with four interleaved accumulators (fixed summation order).
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl CovarianceOperator {
    pub fn from_data(data: DataMatrix, scale: Scale) -> Self {
        let factor = match scale {
            Scale::Raw => 1.0,
            Scale::OneOverM => 1.0 / data.cols() as f64,
        };
        let (rows, cols) = (data.rows(), data.cols());
        let y = data.entries();
        let mut samples = vec![0.0; rows * cols];
        for i in 0..rows {
            for k in 0..cols {
                samples[k * rows + i] = y[i * cols + k];
            }
        }
        Self {
            backing: Backing::Data { rows, samples, factor },
        }
    }

    /// Wraps an explicit symmetric `dim x dim` matrix given row-major.
    pub fn from_symmetric(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("operator dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (entries[i * dim + j], entries[j * dim + i]);
                if !a.is_finite() || (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            backing: Backing::Explicit { dim, entries },
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut entries = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            entries[i * n + i] = *d;
        }
        Self::from_symmetric(n, entries)
    }

    /// Simulates `Y` from a spiked model and wraps it.
    pub fn from_model(spec: &SpikedModelSpec, scale: Scale) -> Result<Self> {
        Ok(Self::from_data(simulate(spec)?, scale))
    }
}

/// Builds the operator for `data` under the chosen scaling.
pub fn make_operator(data: DataMatrix, scale: Scale) -> CovarianceOperator {
    CovarianceOperator::from_data(data, scale)
}

impl LinearOperator for CovarianceOperator {
    fn dim(&self) -> usize {
        match &self.backing {
            Backing::Data { rows, .. } => *rows,
            Backing::Explicit { dim, .. } => *dim,
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
        if out.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: out.len(),
            });
        }
        match &self.backing {
            Backing::Data { rows, samples, factor } => {
                let partials: Vec<Vec<f64>> = samples
                    .par_chunks(SAMPLE_BLOCK * rows)
                    .map(|block| {
                        let mut acc = vec![0.0; n];
                        // Four samples per sweep over `v` and `acc`.
                        let quads = block.chunks_exact(4 * rows);
                        let rest = quads.remainder();
                        for quad in quads {
                            let (y0, r) = quad.split_at(*rows);
                            let (y1, r) = r.split_at(*rows);
                            let (y2, y3) = r.split_at(*rows);
                            let mut c = [0.0; 4];
                            for i in 0..n {
                                let vi = v[i];
                                c[0] += y0[i] * vi;
                                c[1] += y1[i] * vi;
                                c[2] += y2[i] * vi;
                                c[3] += y3[i] * vi;
                            }
                            for i in 0..n {
                                acc[i] += (c[0] * y0[i] + c[1] * y1[i]) + (c[2] * y2[i] + c[3] * y3[i]);
                            }
                        }
                        for y in rest.chunks_exact(*rows) {
                            let c = dot4(y, v);
                            for (a, yi) in acc.iter_mut().zip(y) {
                                *a += c * yi;
                            }
                        }
                        acc
                    })
                    .collect();
                out.iter_mut().for_each(|o| *o = 0.0);
                for part in &partials {
                    for (o, p) in out.iter_mut().zip(part) {
                        *o += p;
                    }
                }
                out.iter_mut().for_each(|o| *o *= factor);
            }
            Backing::Explicit { dim, entries } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &entries[i * dim..(i + 1) * dim];
                    *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
                }
            }
        }
        Ok(())
    }
}

/// A probe drawn uniformly from the unit sphere in `R^n`.
///
/// Normalized iid standard normals; deterministic per seed.
pub fn sample_probe(n: usize, seed: u64) -> Vec<f64> {
    assert!(n >= 1, "probe dimension must be positive");
    let mut stream = Stream::new(seed);
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| stream.normal()).collect();
        let norm = norm2(&v);
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// Euclidean norm with compensated summation of the squares.
pub fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in v {
        let y = (x / scale) * (x / scale) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    scale * sum.sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

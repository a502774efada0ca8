use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::DataMatrix;
use super::rng::{derive_seed, Stream};
use crate::error::{Error, Result};

/// Population eigenvalues outside the spikes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bulk {
    /// Every non-spike eigenvalue equals this variance.
    Constant(f64),
    /// One value per dimension, monotone; the leading entries of the
    /// descending-sorted table are replaced by the spikes.
    Quantiles(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryDistribution {
    #[default]
    Gaussian,
    Rademacher,
}

/// A diagonal spiked population model `Σ = diag(spikes, bulk)` together with
/// the sampling parameters for `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikedModelSpec {
    pub n: usize,
    pub m: usize,
    pub bulk: Bulk,
    pub spikes: Vec<f64>,
    pub distribution: EntryDistribution,
    pub seed: u64,
}

impl SpikedModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidSpec("N and M must be positive".into()));
        }
        if self.spikes.len() > self.n {
            return Err(Error::InvalidSpec(format!(
                "{} spikes exceed dimension {}",
                self.spikes.len(),
                self.n
            )));
        }
        let bulk_max = match &self.bulk {
            Bulk::Constant(s) => {
                if !(s.is_finite() && *s > 0.0) {
                    return Err(Error::InvalidSpec(format!("bulk variance {s} must be positive")));
                }
                *s
            }
            Bulk::Quantiles(q) => {
                if q.len() != self.n {
                    return Err(Error::InvalidSpec(format!(
                        "quantile table has {} entries, expected {}",
                        q.len(),
                        self.n
                    )));
                }
                if q.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(Error::InvalidSpec("quantiles must be positive".into()));
                }
                let asc = q.windows(2).all(|w| w[0] <= w[1]);
                let desc = q.windows(2).all(|w| w[0] >= w[1]);
                if !(asc || desc) {
                    return Err(Error::InvalidSpec("quantile table must be sorted".into()));
                }
                q.iter().cloned().fold(f64::MIN, f64::max)
            }
        };
        for s in &self.spikes {
            if !(s.is_finite() && *s > bulk_max) {
                return Err(Error::InvalidSpec(format!(
                    "spike {s} does not exceed the largest bulk value {bulk_max}"
                )));
            }
        }
        Ok(())
    }

    /// Diagonal of `Σ`: spikes first, then the bulk.
    pub fn population(&self) -> Vec<f64> {
        let mut sigma = match &self.bulk {
            Bulk::Constant(s) => vec![*s; self.n],
            Bulk::Quantiles(q) => {
                let mut q = q.clone();
                q.sort_by(|a, b| b.total_cmp(a));
                q
            }
        };
        sigma[..self.spikes.len()].copy_from_slice(&self.spikes);
        sigma
    }
}

/// Draws `Y = Σ^{1/2} X` with iid unit-variance entries in `X`.
///
/// Pair with [`Scale::OneOverM`](super::Scale::OneOverM) to obtain
/// `W = (1/M) Σ^{1/2} X Xᵀ Σ^{1/2}`. Row `i` is filled from its own stream
/// derived from the seed, so the output is a pure function of the spec.
pub fn simulate(spec: &SpikedModelSpec) -> Result<DataMatrix> {
    spec.validate()?;
    let sigma = spec.population();
    let m = spec.m;
    let mut entries = vec![0.0; spec.n * m];
    entries
        .par_chunks_mut(m)
        .zip(sigma.par_iter())
        .enumerate()
        .for_each(|(i, (row, s))| {
            let mut stream = Stream::new(derive_seed(spec.seed, i as u64));
            let root = s.sqrt();
            match spec.distribution {
                EntryDistribution::Gaussian => {
                    row.iter_mut().for_each(|x| *x = root * stream.normal())
                }
                EntryDistribution::Rademacher => {
                    row.iter_mut().for_each(|x| *x = root * stream.rademacher())
                }
            }
        });
    DataMatrix::new(spec.n, m, entries)
}

const SIMPSON_PANELS: usize = 10_000;

/// Population eigenvalues following a density on `[lo, hi]`.
///
/// Returns the `(i - 1/2)/n` quantiles for `i = 1..=n`, sorted descending.
/// The CDF is tabulated with composite Simpson on 10⁴ panels and inverted by
/// bisection; `density` need not be normalized.
pub fn bulk_quantiles(density: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi > lo && n >= 1);
    let h = (hi - lo) / SIMPSON_PANELS as f64;
    let simpson = |a: f64, b: f64| (b - a) / 6.0 * (density(a) + 4.0 * density(0.5 * (a + b)) + density(b));
    let mut cum = Vec::with_capacity(SIMPSON_PANELS + 1);
    cum.push(0.0);
    for k in 0..SIMPSON_PANELS {
        let a = lo + k as f64 * h;
        let next = cum[k] + simpson(a, a + h);
        cum.push(next);
    }
    let total = cum[SIMPSON_PANELS];
    let cdf = |x: f64| {
        let k = (((x - lo) / h).floor() as usize).min(SIMPSON_PANELS - 1);
        let a = lo + k as f64 * h;
        (cum[k] + simpson(a, x)) / total
    };
    let mut out: Vec<f64> = (1..=n)
        .map(|i| {
            let target = (i as f64 - 0.5) / n as f64;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                if cdf(mid) < target {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= 1e-14 * hi.abs().max(1.0) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect();
    out.reverse();
    out
}

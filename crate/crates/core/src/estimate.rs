//! End-to-end pipelines: single-probe spectral estimation, multi-probe
//! averaging of the Cholesky tails, and spike counting.


use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{cholesky_tridiag, estimate_spectrum_with, extend, ExtendedCholesky, SpectralEstimate};
use crate::lanczos::{lanczos_run, LanczosResult, StoppingRule};
use crate::operator::rng::derive_seed;
use crate::operator::{sample_probe, LinearOperator};
use crate::poles::PoleBackend;

/// Fewest Lanczos steps a probe may stop at because of breakdown.
const MIN_STEPS_ON_BREAKDOWN: usize = 3;
/// Fresh probes tried after an early breakdown before giving up.
const MAX_RESAMPLES: u64 = 8;

/// One probe after Lanczos, Cholesky and extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub steps: usize,
    pub breakdown: bool,
    pub extension: ExtendedCholesky,
}

fn probe_extension(op: &impl LinearOperator, probe: &[f64], rule: &StoppingRule) -> Result<ProbeRun> {
    let LanczosResult {
        jacobi,
        steps_taken,
        breakdown,
        ..
    } = lanczos_run(op, probe, rule)?;
    if breakdown && steps_taken < MIN_STEPS_ON_BREAKDOWN {
        return Err(Error::BreakdownBeforeMinimum { steps: steps_taken });
    }
    let l = cholesky_tridiag(&jacobi)?;
    Ok(ProbeRun {
        steps: steps_taken,
        breakdown,
        extension: extend(&l)?,
    })
}

/// Spectral estimate of the vector spectral distribution at one probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvasdEstimate {
    pub run: ProbeRun,
    pub spectrum: SpectralEstimate,
}

/// Lanczos, Cholesky, tail extension, then support, transform and poles.
pub fn estimate_svasd(op: &impl LinearOperator, probe: &[f64], rule: &StoppingRule) -> Result<SvasdEstimate> {
    estimate_svasd_with(op, probe, rule, PoleBackend::default())
}

pub fn estimate_svasd_with(
    op: &impl LinearOperator,
    probe: &[f64],
    rule: &StoppingRule,
    backend: PoleBackend,
) -> Result<SvasdEstimate> {
    let run = probe_extension(op, probe, rule)?;
    let spectrum = estimate_spectrum_with(&run.extension, backend)?;
    Ok(SvasdEstimate { run, spectrum })
}

/// Probe count, averaging window and base seed for the multi-probe pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingConfig {
    pub k: usize,
    /// Number of trailing Cholesky entries pooled into the shared tail.
    pub q: usize,
    pub seed: u64,
}

impl AveragingConfig {
    /// `q = max(1, ⌊½ ln N⌋)`, matching the default stopping window.
    pub fn for_dimension(n: usize, k: usize, seed: u64) -> Self {
        let q = ((0.5 * (n.max(2) as f64).ln()).floor() as usize).max(1);
        Self { k, q, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.q == 0 {
            return Err(Error::InvalidConfig(format!(
                "averaging needs k >= 1 and q >= 1, got k={}, q={}",
                self.k, self.q
            )));
        }
        Ok(())
    }

    /// Seed of probe `j`.
    pub fn probe_seed(&self, j: usize) -> u64 {
        derive_seed(self.seed, j as u64)
    }
}

/// Replaces the last `q` Cholesky entries of every probe (the tail plus the
/// `q - 1` prefix entries before it) by their mean across all probes.
///
/// An extension with `p` prefix columns came from `p + 2` Cholesky columns;
/// the window needs `p + 2 ≥ q + 2`.
pub fn average_cholesky(exts: &[ExtendedCholesky], q: usize) -> Result<Vec<ExtendedCholesky>> {
    if q == 0 {
        return Err(Error::InvalidConfig("averaging window must be positive".into()));
    }
    if exts.is_empty() {
        return Ok(Vec::new());
    }
    for (j, e) in exts.iter().enumerate() {
        if e.prefix_len() < q {
            return Err(Error::WindowTooLong {
                q,
                probe: j,
                len: e.prefix_len() + 2,
            });
        }
    }
    let (mut sa, mut sb) = (0.0, 0.0);
    for e in exts {
        let p = e.prefix_len();
        let (ta, tb) = e.tail();
        sa += e.prefix_alpha()[p + 1 - q..].iter().sum::<f64>() + ta;
        sb += e.prefix_beta()[p + 1 - q..].iter().sum::<f64>() + tb;
    }
    let count = (exts.len() * q) as f64;
    let (alpha, beta) = (sa / count, sb / count);
    exts.iter()
        .map(|e| {
            let p = e.prefix_len();
            let mut pa = e.prefix_alpha().to_vec();
            let mut pb = e.prefix_beta().to_vec();
            pa[p + 1 - q..].fill(alpha);
            pb[p + 1 - q..].fill(beta);
            ExtendedCholesky::new(pa, pb, alpha, beta)
        })
        .collect()
}

/// A probe of the multi-probe pipeline after averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEstimate {
    pub seed: u64,
    pub steps: usize,
    pub breakdown: bool,
    /// Early breakdowns that forced a fresh probe.
    pub resamples: u32,
    pub spectrum: SpectralEstimate,
}

/// Pooled estimate of the limiting spectral distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsdEstimate {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub probes: Vec<ProbeEstimate>,
}

impl AsdEstimate {
    /// `(1/k) Σⱼ m̂ⱼ(z)`, summed in probe order.
    pub fn transform(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.probes {
            acc += p.spectrum.transform(z)?;
        }
        Ok(acc / self.probes.len() as f64)
    }

    pub fn density(&self, lambda: f64) -> Result<f64> {
        let mut acc = 0.0;
        for p in &self.probes {
            acc += p.spectrum.density(lambda)?;
        }
        Ok(acc / self.probes.len() as f64)
    }

    /// Discrete part of the pooled measure: every probe's poles at weight `w/k`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let k = self.probes.len() as f64;
        let mut out: Vec<(f64, f64)> = self
            .probes
            .iter()
            .flat_map(|p| p.spectrum.poles.iter().zip(&p.spectrum.weights).map(move |(l, w)| (*l, w / k)))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    pub fn steps(&self) -> Vec<usize> {
        self.probes.iter().map(|p| p.steps).collect()
    }
}

fn run_probe(op: &impl LinearOperator, cfg: &AveragingConfig, j: usize, rule: &StoppingRule) -> Result<(u64, u32, ProbeRun)> {
    let base = cfg.probe_seed(j);
    let mut seed = base;
    for attempt in 0..=MAX_RESAMPLES {
        let probe = sample_probe(op.dim(), seed);
        match probe_extension(op, &probe, rule) {
            Err(Error::BreakdownBeforeMinimum { .. }) if attempt < MAX_RESAMPLES => {
                seed = derive_seed(base, attempt + 1);
            }
            Ok(run) => return Ok((seed, attempt as u32, run)),
            Err(e) => {
                return Err(Error::Probe {
                    probe: j,
                    source: Box::new(e),
                })
            }
        }
    }
    unreachable!("the final attempt returns")
}

/// Samples `k` probes, averages their Cholesky tails, and estimates each
/// averaged extension with the connection-coefficient backend.
pub fn estimate_asd(op: &impl LinearOperator, cfg: &AveragingConfig, rule: &StoppingRule) -> Result<AsdEstimate> {
    estimate_asd_with(op, cfg, rule, PoleBackend::default())
}

pub fn estimate_asd_with(
    op: &impl LinearOperator,
    cfg: &AveragingConfig,
    rule: &StoppingRule,
    backend: PoleBackend,
) -> Result<AsdEstimate> {
    cfg.validate()?;
    rule.validate(op.dim())?;
    let runs: Vec<(u64, u32, ProbeRun)> = (0..cfg.k)
        .into_par_iter()
        .map(|j| run_probe(op, cfg, j, rule))
        .collect::<Result<_>>()?;
    let exts: Vec<ExtendedCholesky> = runs.iter().map(|r| r.2.extension.clone()).collect();
    let averaged = average_cholesky(&exts, cfg.q)?;
    let spectra: Vec<SpectralEstimate> = averaged
        .par_iter()
        .enumerate()
        .map(|(j, e)| {
            estimate_spectrum_with(e, backend).map_err(|err| Error::Probe {
                probe: j,
                source: Box::new(err),
            })
        })
        .collect::<Result<_>>()?;
    let (gamma_minus, gamma_plus) = (spectra[0].gamma_minus, spectra[0].gamma_plus);
    let probes = runs
        .into_iter()
        .zip(spectra)
        .map(|((seed, resamples, run), spectrum)| ProbeEstimate {
            seed,
            steps: run.steps,
            breakdown: run.breakdown,
            resamples,
            spectrum,
        })
        .collect();
    Ok(AsdEstimate {
        gamma_minus,
        gamma_plus,
        probes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Most frequent count, ties broken toward the smaller count.
    #[default]
    Mode,
    RoundedMean,
}

impl Aggregation {
    pub fn apply(&self, counts: &[usize]) -> usize {
        if counts.is_empty() {
            return 0;
        }
        match self {
            Aggregation::Mode => {
                let max = *counts.iter().max().expect("nonempty");
                let mut freq = vec![0usize; max + 1];
                counts.iter().for_each(|c| freq[*c] += 1);
                let best = *freq.iter().max().expect("nonempty");
                freq.iter().position(|f| *f == best).expect("present")
            }
            Aggregation::RoundedMean => {
                let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
                mean.round() as usize
            }
        }
    }
}

/// Threshold constants and pole backend for spike counting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub c_thresh: f64,
    /// Exponent in the `C·N^{-δ}` margin above the estimated right edge.
    pub delta: f64,
    pub aggregation: Aggregation,
    pub backend: PoleBackend,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            c_thresh: 1.0,
            delta: 0.25,
            aggregation: Aggregation::Mode,
            backend: PoleBackend::ConnectionCoefficients,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_thresh > 0.0 && self.c_thresh.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must be positive, got {}", self.c_thresh)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0, 1/2), got {}", self.delta)));
        }
        Ok(())
    }

    /// `γ̂₊ + C N^{-δ}`.
    pub fn threshold(&self, gamma_plus: f64, n: usize) -> f64 {
        gamma_plus + self.c_thresh * (n as f64).powf(-self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub r_hat: usize,
    pub per_probe_counts: Vec<usize>,
    /// Per probe, the poles above the threshold.
    pub poles: Vec<Vec<f64>>,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub threshold: f64,
    pub steps: Vec<usize>,
    pub k: usize,
    #[serde(rename = "C")]
    pub c_thresh: f64,
    pub delta: f64,
    pub seed: u64,
    pub wall_time_ms: f64,
}

impl DetectionReport {
    /// The report with its timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_ms: 0.0,
            ..self.clone()
        }
    }
}

/// Counts, for each averaged probe, the poles above `γ̂₊ + C N^{-δ}` and
/// aggregates the counts.
pub fn detect_spikes(
    op: &impl LinearOperator,
    det: &DetectionConfig,
    avg: &AveragingConfig,
    rule: &StoppingRule,
) -> Result<DetectionReport> {
    let clock = Stopwatch::start();
    det.validate()?;
    let asd = estimate_asd_with(op, avg, rule, det.backend)?;
    let mut report = detection_report(&asd, det, avg, op.dim());
    report.wall_time_ms = clock.elapsed_ms();
    Ok(report)
}

/// Wall clock where the platform provides one; bare `wasm32` reads zero.
struct Stopwatch {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed_ms(&self) -> f64 {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return self.start.elapsed().as_secs_f64() * 1e3;
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        0.0
    }
}

/// Builds the report for an existing estimate; `n` is the operator dimension.
/// `wall_time_ms` is left at zero for the caller to fill in.
pub fn detection_report(asd: &AsdEstimate, det: &DetectionConfig, avg: &AveragingConfig, n: usize) -> DetectionReport {
    let threshold = det.threshold(asd.gamma_plus, n);
    let poles: Vec<Vec<f64>> = asd
        .probes
        .iter()
        .map(|p| p.spectrum.poles.iter().cloned().filter(|l| *l > threshold).collect())
        .collect();
    let per_probe_counts: Vec<usize> = poles.iter().map(Vec::len).collect();
    DetectionReport {
        r_hat: det.aggregation.apply(&per_probe_counts),
        per_probe_counts,
        poles,
        gamma_minus: asd.gamma_minus,
        gamma_plus: asd.gamma_plus,
        threshold,
        steps: asd.steps(),
        k: avg.k,
        c_thresh: det.c_thresh,
        delta: det.delta,
        seed: avg.seed,
        wall_time_ms: 0.0,
    }
}

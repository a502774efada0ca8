//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers or comma-separated lists and returns a
//! JSON document. The `*_view` functions hold the logic and run natively too.

use serde_json::{json, Value};
use spectral_spike::reference::{mp_density, mp_edges, outlier_location, DeformedMPModel, SingleSpike};
use spectral_spike::{
    default_rule, detection_report, estimate_asd, estimate_spectrum, finite_section_poles, poles_connection,
    AveragingConfig, Bulk, CovarianceOperator, DetectionConfig, EntryDistribution, ExtendedCholesky, Scale,
    SpikedModelSpec,
};
use wasm_bindgen::prelude::*;

/// Largest dimension the page may request; keeps a tab responsive.
pub const MAX_DIM: usize = 3000;

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect()
}

/// Midpoints of `points` equal cells on `[lo, hi]`.
fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let h = (hi - lo) / points as f64;
    (0..points).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

/// Single spike probed along its own direction: closed-form density and atom
/// against the continued-fraction estimate from the same Cholesky factor.
pub fn single_spike_view(ell: f64, c: f64, points: usize) -> Result<Value, String> {
    let ex = SingleSpike::new(ell, c).map_err(err)?;
    let est = estimate_spectrum(&ex.extension()).map_err(err)?;
    let curve = grid(est.gamma_minus, est.gamma_plus, points.max(2))
        .into_iter()
        .map(|x| Ok(json!([x, ex.density(x), est.density(x).map_err(err)?])))
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!({
        "gamma_minus": est.gamma_minus,
        "gamma_plus": est.gamma_plus,
        "critical_ell": 1.0 + c.sqrt(),
        "supercritical": ex.supercritical(),
        "x0": ex.supercritical().then(|| ex.x0()),
        "w0": ex.w0(),
        "poles": est.poles,
        "weights": est.weights,
        "curve": curve,
    }))
}

/// Simulates `Y`, estimates the spectral distribution from `k` probes and
/// counts spikes, with the Marchenko–Pastur law and predicted outliers for
/// reference.
pub fn simulate_view(
    n: usize,
    c: f64,
    sigma2: f64,
    spikes: &str,
    k: usize,
    seed: u64,
    points: usize,
) -> Result<Value, String> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(format!("N must lie in 2..={MAX_DIM}"));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err("aspect ratio must lie in (0, 1]".into());
    }
    let m = (n as f64 / c).round() as usize;
    let spec = SpikedModelSpec {
        n,
        m,
        bulk: Bulk::Constant(sigma2),
        spikes: parse_list(spikes)?,
        distribution: EntryDistribution::Gaussian,
        seed,
    };
    let op = CovarianceOperator::from_model(&spec, Scale::OneOverM).map_err(err)?;
    let avg = AveragingConfig::for_dimension(n, k, seed.wrapping_add(1));
    let asd = estimate_asd(&op, &avg, &default_rule(n)).map_err(err)?;
    let report = detection_report(&asd, &DetectionConfig::default(), &avg, n);
    let c_eff = n as f64 / m as f64;
    let curve = grid(asd.gamma_minus, asd.gamma_plus, points.max(2))
        .into_iter()
        .map(|x| Ok(json!([x, asd.density(x).map_err(err)?, mp_density(sigma2, c_eff, x)])))
        .collect::<Result<Vec<_>, String>>()?;
    let model = DeformedMPModel::constant(sigma2, n, m).map_err(err)?;
    let predicted = spec
        .spikes
        .iter()
        .map(|s| {
            let o = outlier_location(&model, *s).map_err(err)?;
            Ok(json!({ "spike": s, "location": o.location, "supercritical": o.supercritical }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let (mp_lo, mp_hi) = mp_edges(sigma2, c_eff);
    Ok(json!({
        "n": n,
        "m": m,
        "gamma_minus": asd.gamma_minus,
        "gamma_plus": asd.gamma_plus,
        "mp_edges": [mp_lo, mp_hi],
        "threshold": report.threshold,
        "r_hat": report.r_hat,
        "per_probe_counts": report.per_probe_counts,
        "poles": report.poles,
        "steps": report.steps,
        "predicted": predicted,
        "curve": curve,
    }))
}

/// Runs both pole finders on a user-specified perturbation of a constant tail.
pub fn backends_view(
    prefix_alpha: &str,
    prefix_beta: &str,
    tail_alpha: f64,
    tail_beta: f64,
    section_size: usize,
) -> Result<Value, String> {
    let ext = ExtendedCholesky::new(parse_list(prefix_alpha)?, parse_list(prefix_beta)?, tail_alpha, tail_beta)
        .map_err(err)?;
    let (gm, gp) = ext.support();
    let cc = poles_connection(&ext).map_err(err)?;
    let fs = finite_section_poles(&ext, section_size).map_err(err)?;
    let discrepancy = (cc.locations.len() == fs.locations.len()).then(|| {
        cc.locations
            .iter()
            .zip(&fs.locations)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    Ok(json!({
        "gamma_minus": gm,
        "gamma_plus": gp,
        "connection": cc,
        "finite_section": fs,
        "section_size": section_size,
        "discrepancy": discrepancy,
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn single_spike(ell: f64, c: f64, points: usize) -> Result<String, JsError> {
    to_js(single_spike_view(ell, c, points))
}

#[wasm_bindgen]
pub fn simulate_and_detect(
    n: usize,
    c: f64,
    sigma2: f64,
    spikes: &str,
    k: usize,
    seed: u32,
    points: usize,
) -> Result<String, JsError> {
    to_js(simulate_view(n, c, sigma2, spikes, k, seed.into(), points))
}

#[wasm_bindgen]
pub fn compare_backends(
    prefix_alpha: &str,
    prefix_beta: &str,
    tail_alpha: f64,
    tail_beta: f64,
    section_size: usize,
) -> Result<String, JsError> {
    to_js(backends_view(prefix_alpha, prefix_beta, tail_alpha, tail_beta, section_size))
}

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use spectral_spike::poles::default_section_size;
use spectral_spike::{
    default_rule, detection_report, estimate_asd_with, finite_section_poles, load_data, make_operator,
    poles_connection, save_data, simulate, AveragingConfig, Bulk, CovarianceOperator, DataFormat,
    DetectionConfig, EntryDistribution, Error, ExtendedCholesky, PoleBackend, PoleSet, Scale, SpikedModelSpec,
    StopKind, StoppingRule,
};

use crate::args::{
    AsdArgs, BackendArg, BackendArgs, DetectArgs, DistArg, FormatArg, InputArgs, PolesArgs, ScaleArg,
    SimulateArgs, StopArg,
};

/// How a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flag values (exit 2).
    Usage(String),
    /// I/O, parse or numerical failure (exit 1).
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome = Result<Value, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn format_for(path: &Path, flag: Option<FormatArg>) -> DataFormat {
    match flag {
        Some(FormatArg::Csv) => DataFormat::Csv,
        Some(FormatArg::Binary) => DataFormat::Binary,
        None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => DataFormat::Csv,
        None => DataFormat::Binary,
    }
}

fn format_name(f: DataFormat) -> &'static str {
    match f {
        DataFormat::Csv => "csv",
        DataFormat::Binary => "binary",
    }
}

pub fn simulate_cmd(a: &SimulateArgs) -> Outcome {
    let spec = SpikedModelSpec {
        n: a.n,
        m: a.m,
        bulk: Bulk::Constant(a.sigma2),
        spikes: a.spikes.clone(),
        distribution: match a.dist {
            DistArg::Gaussian => EntryDistribution::Gaussian,
            DistArg::Rademacher => EntryDistribution::Rademacher,
        },
        seed: a.seed,
    };
    spec.validate()?;
    let format = format_for(&a.out, a.format);
    let data = simulate(&spec)?;
    save_data(&a.out, &data, format)?;
    Ok(json!({
        "n": spec.n,
        "m": spec.m,
        "sigma2": a.sigma2,
        "spikes": spec.spikes,
        "distribution": spec.distribution,
        "seed": spec.seed,
        "out": a.out,
        "format": format_name(format),
    }))
}

/// Flag checks that need no data.
fn check_input_flags(a: &InputArgs) -> Result<(), Failure> {
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    if a.q == Some(0) {
        return Err(usage("--q must be at least 1"));
    }
    if let Some(t) = a.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(usage(format!("--tol must be positive, got {t}")));
        }
    }
    if a.max_steps == Some(0) {
        return Err(usage("--max-steps must be at least 1"));
    }
    Ok(())
}

fn pole_backend(b: &BackendArgs) -> Result<PoleBackend, Failure> {
    match (b.backend, b.section_size) {
        (BackendArg::Cc, None) => Ok(PoleBackend::ConnectionCoefficients),
        (BackendArg::Cc, Some(_)) => Err(usage("--section-size requires --backend finite")),
        (BackendArg::Finite, size) => Ok(PoleBackend::FiniteSection { section_size: size }),
    }
}

fn backend_name(b: BackendArg) -> &'static str {
    match b {
        BackendArg::Cc => "cc",
        BackendArg::Finite => "finite",
    }
}

struct Loaded {
    op: CovarianceOperator,
    rule: StoppingRule,
    avg: AveragingConfig,
    n: usize,
}

fn stopping_rule(a: &InputArgs, n: usize) -> Result<StoppingRule, Failure> {
    let default = default_rule(n);
    let (dq, dtol) = match default.kind {
        StopKind::TwoWindow { q, mean_tol, .. } => (q, mean_tol),
        _ => unreachable!("the default rule is two-window"),
    };
    let max_steps = a.max_steps.unwrap_or(default.max_steps);
    let (q, tol) = (a.q.unwrap_or(dq), a.tol.unwrap_or(dtol));
    let kind = match a.stop {
        Some(StopArg::Fixed) => StopKind::FixedSteps { n: max_steps },
        Some(StopArg::Tail) => StopKind::TailStddev { q, tol },
        Some(StopArg::TwoWindow) | None => StopKind::TwoWindow {
            q,
            gap: q,
            mean_tol: tol,
            std_tol: tol,
        },
    };
    let rule = StoppingRule { kind, max_steps };
    rule.validate(n)?;
    Ok(rule)
}

fn load(a: &InputArgs) -> Result<Loaded, Failure> {
    let format = format_for(&a.input, a.format);
    let data = load_data(&a.input, format).map_err(|e| Failure::Runtime(e.to_string()))?;
    let n = data.rows();
    let scale = match a.scale {
        ScaleArg::Raw => Scale::Raw,
        ScaleArg::OneOverM => Scale::OneOverM,
    };
    let rule = stopping_rule(a, n)?;
    let mut avg = AveragingConfig::for_dimension(n, a.k, a.seed);
    if let Some(q) = a.q {
        avg.q = q;
    }
    avg.validate()?;
    Ok(Loaded {
        op: make_operator(data, scale),
        rule,
        avg,
        n,
    })
}

pub fn detect_cmd(a: &DetectArgs) -> Outcome {
    check_input_flags(&a.input)?;
    let det = DetectionConfig {
        c_thresh: a.c_thresh,
        delta: a.delta,
        backend: pole_backend(&a.backend)?,
        ..Default::default()
    };
    det.validate()?;
    if a.trials == Some(0) {
        return Err(usage("--trials must be at least 1"));
    }
    let l = load(&a.input)?;
    let run = |seed: u64| -> Result<_, Failure> {
        let avg = AveragingConfig { seed, ..l.avg };
        let start = Instant::now();
        let asd = estimate_asd_with(&l.op, &avg, &l.rule, det.backend)?;
        let mut report = detection_report(&asd, &det, &avg, l.n);
        report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(report)
    };
    let Some(trials) = a.trials else {
        return Ok(to_json(&run(a.input.seed)?));
    };
    let seeds: Vec<u64> = (0..trials as u64).map(|t| a.input.seed + t).collect();
    let reports = seeds.iter().map(|s| run(*s)).collect::<Result<Vec<_>, _>>()?;
    let counts: Vec<usize> = reports.iter().map(|r| r.r_hat).collect();
    let top = counts.iter().copied().max().unwrap_or(0);
    let table: Vec<Value> = (0..=top)
        .map(|r| {
            let c = counts.iter().filter(|x| **x == r).count();
            json!({ "r": r, "count": c, "probability": c as f64 / trials as f64 })
        })
        .collect();
    Ok(json!({
        "trials": trials,
        "seeds": seeds,
        "r_hat": counts,
        "mean_r_hat": counts.iter().sum::<usize>() as f64 / trials as f64,
        "table": table,
        "threshold": reports.iter().map(|r| r.threshold).collect::<Vec<_>>(),
        "C": det.c_thresh,
        "delta": det.delta,
        "k": l.avg.k,
    }))
}

/// Midpoints of `points` equal cells covering `[lo, hi]`.
pub fn density_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let h = (hi - lo) / points as f64;
    (0..points).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

pub fn asd_cmd(a: &AsdArgs) -> Outcome {
    check_input_flags(&a.input)?;
    if a.grid < 2 {
        return Err(usage(format!("--grid must be at least 2, got {}", a.grid)));
    }
    let backend = pole_backend(&a.backend)?;
    let l = load(&a.input)?;
    let asd = estimate_asd_with(&l.op, &l.avg, &l.rule, backend)?;
    let mut csv = String::from("lambda,density\n");
    for x in density_grid(asd.gamma_minus, asd.gamma_plus, a.grid) {
        csv.push_str(&format!("{x:e},{:e}\n", asd.density(x)?));
    }
    fs::write(&a.out, csv).map_err(|e| Failure::Runtime(format!("i/o failure on {}: {e}", a.out.display())))?;
    let (poles, weights): (Vec<f64>, Vec<f64>) = asd.atoms().into_iter().unzip();
    Ok(json!({
        "gamma_minus": asd.gamma_minus,
        "gamma_plus": asd.gamma_plus,
        "poles": poles,
        "weights": weights,
        "k": l.avg.k,
        "grid": a.grid,
        "steps": asd.steps(),
        "out": a.out,
    }))
}

fn pole_entry(set: &Result<PoleSet, Error>) -> Value {
    match set {
        Ok(s) => to_json(s),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Max location and weight gaps between two pole lists of equal length.
fn discrepancy(a: &PoleSet, b: &PoleSet) -> Option<(f64, f64)> {
    (a.locations.len() == b.locations.len()).then(|| {
        let gap = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        (gap(&a.locations, &b.locations), gap(&a.weights, &b.weights))
    })
}

pub fn poles_cmd(a: &PolesArgs) -> Outcome {
    check_input_flags(&a.input)?;
    let backend = pole_backend(&a.backend)?;
    let l = load(&a.input)?;
    let asd = estimate_asd_with(&l.op, &l.avg, &l.rule, backend)?;
    let mut worst: Option<f64> = Some(0.0);
    let mut probes = Vec::new();
    for p in &asd.probes {
        let ext: &ExtendedCholesky = &p.spectrum.extension;
        let size = a.backend.section_size.unwrap_or_else(|| default_section_size(ext));
        let cc = poles_connection(ext);
        let fs = finite_section_poles(ext, size);
        let gap = match (&cc, &fs) {
            (Ok(x), Ok(y)) => discrepancy(x, y),
            _ => None,
        };
        worst = match (worst, gap) {
            (Some(w), Some((dl, _))) => Some(w.max(dl)),
            _ => None,
        };
        let selected = match a.backend.backend {
            BackendArg::Cc => &cc,
            BackendArg::Finite => &fs,
        };
        probes.push(json!({
            "seed": p.seed,
            "steps": p.steps,
            "poles": pole_entry(selected),
            "connection": pole_entry(&cc),
            "finite_section": pole_entry(&fs),
            "section_size": size,
            "counts_match": gap.is_some(),
            "location_discrepancy": gap.map(|g| g.0),
            "weight_discrepancy": gap.map(|g| g.1),
        }));
    }
    Ok(json!({
        "gamma_minus": asd.gamma_minus,
        "gamma_plus": asd.gamma_plus,
        "k": l.avg.k,
        "backend": backend_name(a.backend.backend),
        "section_size": a.backend.section_size,
        "max_discrepancy": worst,
        "probes": probes,
    }))
}

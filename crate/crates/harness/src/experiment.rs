//! Executing configured runs and writing their records.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ags_core::objectives::{estimate_smoothness, Objective};
use ags_core::optimizers::{run, CertificateKind, CertificateRequest, Method, RunConfig, RunOutcome, RunRecord};
use ags_core::par::Execution;
use ags_core::rng::RngStream;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;

pub const RECORDS_HEADER: &str =
    "t,f_x,f_best,grad_norm_est,grad_stderr_norm,sigma_opnorm,sigma_min_eig,evals_cumulative,certificate";
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const COMPARISON_FILE: &str = "comparison.csv";

pub fn version() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

/// Writes non-finite values as the strings `inf`, `-inf` and `NaN`, which
/// JSON numbers cannot hold.
mod lossy_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub kind: String,
    /// Certificate at the final iterate.
    #[serde(with = "lossy_f64")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub method: String,
    /// True for the derivative-free comparison baseline.
    pub baseline: bool,
    #[serde(with = "lossy_f64")]
    pub f0: f64,
    #[serde(with = "lossy_f64")]
    pub final_f: f64,
    #[serde(with = "lossy_f64")]
    pub best_f: f64,
    pub iterations: usize,
    pub total_evals: u64,
    pub wall_time_s: f64,
    pub aborted: bool,
    pub abort_reason: Option<String>,
    pub certificate: Option<CertificateSummary>,
    pub adaptation_fallbacks: usize,
    pub version: String,
    pub config: ExperimentConfig,
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        cfg
    }
}

/// Starting point: the configured one, or uniform in the function's domain.
pub fn initial_point(cfg: &ExperimentConfig) -> DVector<f64> {
    if let Some(x0) = &cfg.function.x0 {
        return DVector::from_vec(x0.clone());
    }
    let (lo, hi) = cfg.benchmark().init_domain();
    let mut rng = RngStream::named(cfg.seed, "init").rng();
    DVector::from_fn(cfg.function.dim, |_, _| rng.random_range(lo..hi))
}

fn certificate_request(cfg: &ExperimentConfig, f: &Objective, x0: &DVector<f64>) -> Option<CertificateRequest> {
    let l = f.smoothness()?;
    let f_star = f.f_star()?;
    let f0_gap = (f.value_uncounted(x0) - f_star).max(0.0);
    let x0_dist = f.x_opt().map(|x| (x0 - x).norm());
    let lambda = cfg.optimizer.lambda.expect("resolved");
    match cfg.method() {
        Method::AgsGd if lambda <= 1.0 / l => Some(match (f.is_convex(), x0_dist) {
            (true, Some(dist)) => CertificateRequest {
                kind: CertificateKind::GdConvex,
                l,
                x0_dist: dist,
                f0_gap,
                lambda_sq_bound: 0.0,
            },
            _ => CertificateRequest {
                kind: CertificateKind::GdNonconvex,
                l,
                x0_dist: 0.0,
                f0_gap,
                lambda_sq_bound: 0.0,
            },
        }),
        Method::AgsSgd => cfg.optimizer.lambda_sq_bound.map(|b| CertificateRequest {
            kind: CertificateKind::Sgd,
            l,
            x0_dist: 0.0,
            f0_gap,
            lambda_sq_bound: b,
        }),
        _ => None,
    }
}

fn kind_name(kind: CertificateKind) -> &'static str {
    match kind {
        CertificateKind::GdConvex => "gd_convex",
        CertificateKind::GdNonconvex => "gd_nonconvex",
        CertificateKind::Sgd => "sgd",
    }
}

/// Fills the defaults that depend on the starting point: the constant step,
/// when neither given nor implied by a known smoothness constant, becomes
/// `1/(2L̂)` with `L̂` the curvature estimated at `x_0`.
pub fn prepare(cfg: &ExperimentConfig) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = cfg.clone();
    if cfg.optimizer.lambda.is_none() {
        let l = estimate_smoothness(&cfg.objective()?, &initial_point(&cfg))?;
        cfg.optimizer.lambda = Some(if l > 0.0 { 1.0 / (2.0 * l) } else { 1.0 });
    }
    Ok(cfg)
}

/// Runs the optimizer described by `cfg` without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<(RunOutcome, Option<CertificateKind>), HarnessError> {
    execute_with(cfg, Execution::default())
}

pub fn execute_with(cfg: &ExperimentConfig, execution: Execution) -> Result<(RunOutcome, Option<CertificateKind>), HarnessError> {
    let cfg = &prepare(cfg)?;
    let problem = cfg.problem()?;
    let x0 = initial_point(cfg);
    let mut rc = RunConfig::new(cfg.method(), cfg.schedule(), cfg.grad_source(), cfg.adaptation()?, cfg.optimizer.horizon);
    rc.seed = cfg.seed;
    rc.execution = execution;
    rc.grad_tol = cfg.optimizer.grad_tol;
    rc.adaptation_samples = cfg.adaptation_samples();
    rc.certificate = certificate_request(cfg, problem.base(), &x0);
    let kind = rc.certificate.map(|c| c.kind);
    Ok((run(&problem, &x0, &rc)?, kind))
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn record_fields(r: &RunRecord) -> String {
    let cert = r.certificate.map(fmt_f64).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.t,
        fmt_f64(r.f_x),
        fmt_f64(r.f_best),
        fmt_f64(r.grad_norm_est),
        fmt_f64(r.grad_stderr_norm),
        fmt_f64(r.sigma_opnorm),
        fmt_f64(r.sigma_min_eig),
        r.evals_cumulative,
        cert
    )
}

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut s = String::with_capacity(200 * (records.len() + 1));
    s.push_str(RECORDS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&record_fields(r));
        s.push('\n');
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| HarnessError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Runs `cfg`, writing `records.csv` and `summary.json` into `dir`.
///
/// An aborted run still writes its partial records; the summary carries the
/// abort flag.
pub fn run_into(
    cfg: &ExperimentConfig,
    name: &str,
    dir: &Path,
    baseline: bool,
    execution: Execution,
) -> Result<(Summary, Vec<RunRecord>), HarnessError> {
    create_dir(dir)?;
    let cfg = &prepare(cfg)?;
    let start = Instant::now();
    let (out, kind) = execute_with(cfg, execution)?;
    let wall = start.elapsed().as_secs_f64();
    write_file(&dir.join(RECORDS_FILE), &records_csv(&out.records))?;
    let summary = Summary {
        name: name.to_string(),
        method: cfg.method().name().to_string(),
        baseline,
        f0: out.f0,
        final_f: out.final_f(),
        best_f: out.best_f(),
        iterations: out.records.len(),
        total_evals: out.records.last().map_or(0, |r| r.evals_cumulative),
        wall_time_s: wall,
        aborted: out.aborted.is_some(),
        abort_reason: out.aborted.as_ref().map(|e| e.to_string()),
        certificate: kind.and_then(|k| {
            out.records.last().and_then(|r| r.certificate).map(|value| CertificateSummary {
                kind: kind_name(k).to_string(),
                value,
            })
        }),
        adaptation_fallbacks: out.adaptation_fallbacks.len(),
        version: version(),
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&dir.join(SUMMARY_FILE), &json)?;
    Ok((summary, out.records))
}

/// The `run` verb: writes into the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary, HarnessError> {
    let name = cfg.name.clone().unwrap_or_else(|| cfg.function.name.clone());
    run_into(cfg, &name, &cfg.output_dir(), false, Execution::default()).map(|(s, _)| s)
}

/// A derivative-free run on the same function, seed and budget.
pub fn cma_baseline(cfg: &ExperimentConfig) -> Result<ExperimentConfig, HarnessError> {
    let mut b = cfg.clone();
    b.optimizer.method = Method::Cma.name().to_string();
    b.smoothing.gradient = Some("exact".into());
    b.smoothing.adaptation = None;
    b.optimizer.lambda_sq_bound = None;
    b.name = None;
    b.resolve()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// The `compare` verb: runs every config plus one derivative-free baseline per
/// config, each in `out/<name>/`, and merges all records into one long CSV.
///
/// Runs execute in parallel with one another; each run is itself sequential.
pub fn compare(configs: &[(String, ExperimentConfig)], out: &Path) -> Result<Vec<Summary>, HarnessError> {
    create_dir(out)?;
    let mut jobs: Vec<(String, ExperimentConfig, bool)> = Vec::new();
    let mut taken = std::collections::HashSet::new();
    let mut unique = |name: &str| {
        let mut candidate = name.to_string();
        let mut i = 2;
        while !taken.insert(candidate.clone()) {
            candidate = format!("{name}-{i}");
            i += 1;
        }
        candidate
    };
    for (name, cfg) in configs {
        jobs.push((unique(name), cfg.clone(), false));
    }
    for (name, cfg) in configs {
        if cfg.method() != Method::Cma {
            jobs.push((unique(&format!("{name}-cma-baseline")), cma_baseline(cfg)?, true));
        }
    }

    let results: Vec<Result<(Summary, Vec<RunRecord>), HarnessError>> = jobs
        .par_iter()
        .map(|(name, cfg, baseline)| run_into(cfg, name, &out.join(name), *baseline, Execution::Sequential))
        .collect();

    let mut merged = String::new();
    merged.push_str("config,method,baseline,");
    merged.push_str(RECORDS_HEADER);
    merged.push('\n');
    let mut summaries = Vec::with_capacity(results.len());
    for r in results {
        let (summary, records) = r?;
        for rec in &records {
            let _ = writeln!(
                merged,
                "{},{},{},{}",
                csv_field(&summary.name),
                summary.method,
                summary.baseline,
                record_fields(rec)
            );
        }
        summaries.push(summary);
    }
    write_file(&out.join(COMPARISON_FILE), &merged)?;
    Ok(summaries)
}

//! Experiment configuration: strict JSON parsing, validation and defaults.
//!
//! Every optional field is resolved at parse time, so serializing a parsed
//! config yields a document that parses back to the same value.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use ags_core::adaptation::{self, AdaptationKind, AdaptationStrategy, CmaParams};
use ags_core::bounds::ThetaSchedule;
use ags_core::linalg::SpdMatrix;
use ags_core::objectives::{make_benchmark, make_finite_sum, Benchmark, FiniteSum, Objective};
use ags_core::optimizers::{self, GradSource, Method, Schedule, StepSize};
use ags_core::smoothing::DeltaVariant;

use crate::error::{FieldError, HarnessError};

/// Output root used when neither the config nor the command line names one.
pub const OUT_DIR_ENV: &str = "AGS_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "out";
const DEFAULT_SIGMA0: f64 = 1.0;
const DEFAULT_GAMMA: f64 = 0.95;
const DEFAULT_MC_SAMPLES: usize = 64;
const DEFAULT_ETA0_UNKNOWN_L: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in comparison output; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub function: FunctionConfig,
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub smoothing: SmoothingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticConfig>,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub name: String,
    pub dim: usize,
    /// `null` leaves the function unrotated.
    #[serde(default)]
    pub rotation_seed: Option<u64>,
    #[serde(default)]
    pub x_opt: Option<XOpt>,
    /// Starting point; drawn uniformly from the function's domain when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XOpt {
    Named(String),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Constant step for the gradient-descent methods.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// `η_0` of `η_t = η_0 t^{-p}` for the stochastic methods.
    #[serde(default)]
    pub eta0: Option<f64>,
    #[serde(default)]
    pub eta_exponent: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    /// `θ_t = 1 − theta_c · t^{−theta_q}`.
    #[serde(default)]
    pub theta_c: Option<f64>,
    #[serde(default)]
    pub theta_q: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub grad_tol: Option<f64>,
    /// Bound on `E‖∇f_k‖²` needed by the stochastic certificate.
    #[serde(default)]
    pub lambda_sq_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    #[serde(default)]
    pub sigma0: Option<SigmaSpec>,
    #[serde(default)]
    pub adaptation: Option<AdaptationConfig>,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub cap: Option<f64>,
    /// "analytic", "mc" or "exact".
    #[serde(default)]
    pub gradient: Option<String>,
    #[serde(default)]
    pub mc_samples: Option<usize>,
    /// "central" or "forward".
    #[serde(default)]
    pub delta: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Isotropic(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptationConfig {
    /// "fixed", "geometric" or "cma".
    pub kind: String,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub mu: Option<usize>,
    #[serde(default)]
    pub c_mu: Option<f64>,
    #[serde(default)]
    pub scale_decay: Option<f64>,
    /// Samples evaluated for the update when the gradient source provides none.
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub noise_scale: f64,
}

/// Parses, validates and fills in defaults.
pub fn parse_config(document: &str) -> Result<ExperimentConfig, HarnessError> {
    let raw: ExperimentConfig = serde_json::from_str(document).map_err(|e| HarnessError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    raw.resolve()
}

impl ExperimentConfig {
    /// Validates every field and fills each default.
    pub fn resolve(mut self) -> Result<Self, HarnessError> {
        let mut errors = Vec::new();
        let mut err = |field: &str, message: String| errors.push(FieldError::new(field, message));

        let bench = match self.function.name.parse::<Benchmark>() {
            Ok(b) => Some(b),
            Err(e) => {
                err("function.name", e.to_string());
                None
            }
        };
        let d = self.function.dim;
        let mut dim_ok = bench.is_some();
        if let Some(b) = bench {
            if let Err(e) = b.check_dim(d) {
                err("function.dim", dimension_message(b, d, &e.to_string()));
                dim_ok = false;
            }
        }

        match &self.function.x_opt {
            None => self.function.x_opt = Some(XOpt::Named("origin".into())),
            Some(XOpt::Named(s)) if s == "origin" => {}
            Some(XOpt::Named(s)) => err("function.x_opt", format!("expected \"origin\" or a vector, got \"{s}\"")),
            Some(XOpt::Point(p)) => check_vector("function.x_opt", p, d, &mut err),
        }
        if let Some(x0) = &self.function.x0 {
            check_vector("function.x0", x0, d, &mut err);
        }

        let method = match self.optimizer.method.parse::<Method>() {
            Ok(m) => Some(m),
            Err(_) => {
                err(
                    "optimizer.method",
                    format!(
                        "unknown method \"{}\"; expected one of {}",
                        self.optimizer.method,
                        Method::ALL.map(|m| m.name()).join(", ")
                    ),
                );
                None
            }
        };
        if self.optimizer.horizon == 0 {
            err("optimizer.T", "must be at least 1".into());
        }

        // Smoothness constant of the base function, when known.
        let l = bench.filter(|_| dim_ok).and_then(|b| {
            make_benchmark(b, d, None, DVector::zeros(d)).ok().and_then(|f| f.smoothness())
        });
        let quadratic = matches!(bench, Some(Benchmark::Sphere | Benchmark::Ellipsoidal));

        let o = &mut self.optimizer;
        // Without a known L the constant step is estimated at run time from
        // the curvature at x_0.
        if o.lambda.is_none() {
            o.lambda = l.map(|l| 1.0 / (2.0 * l));
        }
        if let Some(lambda) = o.lambda {
            positive("optimizer.lambda", lambda, &mut err);
        }
        let eta0 = *o.eta0.get_or_insert(o.lambda.unwrap_or(DEFAULT_ETA0_UNKNOWN_L));
        positive("optimizer.eta0", eta0, &mut err);
        let p = *o.eta_exponent.get_or_insert(optimizers::DEFAULT_ETA_EXPONENT);
        if !(p >= 0.0 && p.is_finite()) {
            err("optimizer.eta_exponent", format!("must be >= 0, got {p}"));
        }
        let beta = *o.beta.get_or_insert(optimizers::DEFAULT_BETA);
        if !(0.0..1.0).contains(&beta) {
            err("optimizer.beta", format!("must lie in [0, 1), got {beta}"));
        }
        let tc = *o.theta_c.get_or_insert(optimizers::DEFAULT_THETA_C);
        if !(tc > 0.0 && tc <= 1.0) {
            err("optimizer.theta_c", format!("must lie in (0, 1], got {tc}"));
        }
        let tq = *o.theta_q.get_or_insert(optimizers::DEFAULT_THETA_Q);
        if !(tq >= 0.0 && tq.is_finite()) {
            err("optimizer.theta_q", format!("must be >= 0, got {tq}"));
        }
        let eps = *o.epsilon.get_or_insert(optimizers::DEFAULT_EPSILON);
        if !(eps >= 0.0 && eps.is_finite()) {
            err("optimizer.epsilon", format!("must be >= 0, got {eps}"));
        }
        if let Some(tol) = o.grad_tol {
            positive("optimizer.grad_tol", tol, &mut err);
        }
        if let Some(b) = o.lambda_sq_bound {
            if !(b >= 0.0 && b.is_finite()) {
                err("optimizer.lambda_sq_bound", format!("must be >= 0, got {b}"));
            }
        }

        let s = &mut self.smoothing;
        match s.sigma0.get_or_insert(SigmaSpec::Isotropic(DEFAULT_SIGMA0)) {
            SigmaSpec::Isotropic(v) => positive("smoothing.sigma0", *v, &mut err),
            SigmaSpec::Matrix(rows) => {
                if let Err(msg) = sigma_matrix(rows, d) {
                    err("smoothing.sigma0", msg);
                }
            }
        }
        let floor = *s.floor.get_or_insert(adaptation::DEFAULT_FLOOR);
        let cap = *s.cap.get_or_insert(adaptation::DEFAULT_CAP);
        if !(floor > 0.0 && floor <= cap && cap.is_finite()) {
            err("smoothing.floor", format!("need 0 < floor <= cap, got floor {floor}, cap {cap}"));
        }
        let gradient = s
            .gradient
            .get_or_insert_with(|| if quadratic { "analytic".into() } else { "mc".into() })
            .clone();
        match gradient.as_str() {
            "analytic" if !quadratic && method.is_some_and(Method::is_smoothed) => err(
                "smoothing.gradient",
                format!("analytic smoothed gradients need a quadratic function, not {}", self.function.name),
            ),
            "analytic" | "mc" | "exact" => {}
            other => err("smoothing.gradient", format!("expected analytic, mc or exact, got \"{other}\"")),
        }
        let n = *s.mc_samples.get_or_insert(DEFAULT_MC_SAMPLES);
        if n == 0 {
            err("smoothing.mc_samples", "must be at least 1".into());
        }
        match s.delta.get_or_insert_with(|| "central".into()).as_str() {
            "central" | "forward" => {}
            other => err("smoothing.delta", format!("expected central or forward, got \"{other}\"")),
        }
        let a = s.adaptation.get_or_insert_with(|| AdaptationConfig {
            kind: "geometric".into(),
            gamma: None,
            mu: None,
            c_mu: None,
            scale_decay: None,
            samples: None,
        });
        match a.kind.as_str() {
            "fixed" => {}
            "geometric" => {
                let g = *a.gamma.get_or_insert(DEFAULT_GAMMA);
                if !(g > 0.0 && g < 1.0) {
                    err("smoothing.adaptation.gamma", format!("must lie in (0, 1), got {g}"));
                }
            }
            "cma" => {
                let samples = if gradient == "mc" { n } else { *a.samples.get_or_insert(optimizers::DEFAULT_ADAPTATION_SAMPLES) };
                let mu = *a.mu.get_or_insert((samples / 2).max(1));
                if mu == 0 || mu > samples {
                    err("smoothing.adaptation.mu", format!("must lie in 1..={samples}, got {mu}"));
                }
                let c = *a.c_mu.get_or_insert(adaptation::DEFAULT_C_MU);
                if !(c > 0.0 && c <= 1.0) {
                    err("smoothing.adaptation.c_mu", format!("must lie in (0, 1], got {c}"));
                }
                let sd = *a.scale_decay.get_or_insert(adaptation::DEFAULT_SCALE_DECAY);
                if !(sd > 0.0 && sd <= 1.0) {
                    err("smoothing.adaptation.scale_decay", format!("must lie in (0, 1], got {sd}"));
                }
            }
            other => err(
                "smoothing.adaptation.kind",
                format!("expected fixed, geometric or cma, got \"{other}\""),
            ),
        }
        if let Some(samples) = a.samples {
            if samples == 0 {
                err("smoothing.adaptation.samples", "must be at least 1".into());
            }
        }
        if method == Some(Method::Cma) {
            a.samples.get_or_insert(optimizers::DEFAULT_ADAPTATION_SAMPLES);
        }

        if let Some(st) = &self.stochastic {
            if st.k == 0 {
                err("stochastic.K", "must be at least 1".into());
            }
            if !(st.noise_scale >= 0.0 && st.noise_scale.is_finite()) {
                err("stochastic.noise_scale", format!("must be >= 0, got {}", st.noise_scale));
            }
        }

        if self.output.is_none() {
            self.output = Some(default_output_root());
        }

        if errors.is_empty() {
            Ok(self)
        } else {
            Err(HarnessError::Validation(errors))
        }
    }

    pub fn method(&self) -> Method {
        self.optimizer.method.parse().expect("validated")
    }

    pub fn benchmark(&self) -> Benchmark {
        self.function.name.parse().expect("validated")
    }

    pub fn x_opt(&self) -> DVector<f64> {
        match &self.function.x_opt {
            Some(XOpt::Point(p)) => DVector::from_vec(p.clone()),
            _ => DVector::zeros(self.function.dim),
        }
    }

    pub fn objective(&self) -> Result<Objective, HarnessError> {
        let f = &self.function;
        Ok(make_benchmark(self.benchmark(), f.dim, f.rotation_seed, self.x_opt())?)
    }

    pub fn problem(&self) -> Result<FiniteSum, HarnessError> {
        let base = self.objective()?;
        Ok(match &self.stochastic {
            Some(st) => make_finite_sum(base, st.k, st.noise_scale, self.seed)?,
            None => FiniteSum::single(base),
        })
    }

    pub fn schedule(&self) -> Schedule {
        let o = &self.optimizer;
        let eta = match self.method() {
            Method::AgsGd | Method::Gd | Method::Cma => StepSize::Constant(o.lambda.expect("step fixed by experiment::prepare")),
            _ => StepSize::PowerLaw {
                eta0: o.eta0.expect("resolved"),
                p: o.eta_exponent.expect("resolved"),
            },
        };
        Schedule {
            eta,
            beta: o.beta.expect("resolved"),
            theta: ThetaSchedule::PowerLaw {
                c: o.theta_c.expect("resolved"),
                q: o.theta_q.expect("resolved"),
            },
            epsilon: o.epsilon.expect("resolved"),
        }
    }

    pub fn grad_source(&self) -> GradSource {
        let s = &self.smoothing;
        match s.gradient.as_deref().expect("resolved") {
            "analytic" => GradSource::AnalyticQuadratic,
            "exact" => GradSource::ExactUnsmoothed,
            _ => GradSource::Mc {
                samples: s.mc_samples.expect("resolved"),
                variant: match s.delta.as_deref() {
                    Some("forward") => DeltaVariant::Forward,
                    _ => DeltaVariant::Central,
                },
            },
        }
    }

    pub fn sigma0(&self) -> Result<SpdMatrix, HarnessError> {
        let d = self.function.dim;
        match self.smoothing.sigma0.as_ref().expect("resolved") {
            SigmaSpec::Isotropic(v) => Ok(SpdMatrix::isotropic(d, *v)?),
            SigmaSpec::Matrix(rows) => sigma_matrix(rows, d).map_err(|m| {
                HarnessError::Validation(vec![FieldError::new("smoothing.sigma0", m)])
            }),
        }
    }

    pub fn adaptation(&self) -> Result<AdaptationStrategy, HarnessError> {
        let s = &self.smoothing;
        let a = s.adaptation.as_ref().expect("resolved");
        let kind = match a.kind.as_str() {
            "fixed" => AdaptationKind::Fixed,
            "geometric" => AdaptationKind::Geometric {
                gamma: a.gamma.expect("resolved"),
            },
            _ => AdaptationKind::Cma(CmaParams::new(
                a.mu.expect("resolved"),
                a.c_mu.expect("resolved"),
                a.scale_decay.expect("resolved"),
            )?),
        };
        Ok(AdaptationStrategy::new(kind, self.sigma0()?).with_bounds(s.floor.expect("resolved"), s.cap.expect("resolved")))
    }

    pub fn adaptation_samples(&self) -> usize {
        self.smoothing
            .adaptation
            .as_ref()
            .and_then(|a| a.samples)
            .unwrap_or(optimizers::DEFAULT_ADAPTATION_SAMPLES)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(default_output_root)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

fn dimension_message(bench: Benchmark, dim: usize, fallback: &str) -> String {
    match bench {
        Benchmark::Powell => format!("powell requires dim divisible by 4 (got {dim})"),
        Benchmark::Rosenbrock if dim < 2 => format!("rosenbrock requires dim >= 2 (got {dim})"),
        _ => fallback.to_string(),
    }
}

fn positive(field: &str, v: f64, err: &mut impl FnMut(&str, String)) {
    if !(v > 0.0 && v.is_finite()) {
        err(field, format!("must be positive and finite, got {v}"));
    }
}

fn check_vector(field: &str, v: &[f64], dim: usize, err: &mut impl FnMut(&str, String)) {
    if v.len() != dim {
        err(field, format!("has {} entries, expected {dim}", v.len()));
    } else if v.iter().any(|x| !x.is_finite()) {
        err(field, "entries must be finite".into());
    }
}

fn sigma_matrix(rows: &[Vec<f64>], dim: usize) -> Result<SpdMatrix, String> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(format!("expected a {dim}x{dim} matrix"));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err("matrix must be symmetric".into());
    }
    SpdMatrix::from_matrix(m).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"function":{"name":"sphere","dim":2},"optimizer":{"method":"ags_gd","T":100},"seed":1,"output":"out/"}"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.optimizer.lambda, Some(0.25));
        assert_eq!(c.optimizer.eta_exponent, Some(0.6));
        assert_eq!(c.optimizer.beta, Some(0.9));
        assert_eq!(c.optimizer.epsilon, Some(1e-8));
        assert_eq!(c.smoothing.gradient.as_deref(), Some("analytic"));
        assert_eq!(c.smoothing.sigma0, Some(SigmaSpec::Isotropic(1.0)));
        assert_eq!(c.function.x_opt, Some(XOpt::Named("origin".into())));
        assert_eq!(c.output, Some(PathBuf::from("out/")));
    }

    #[test]
    fn round_trip() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&c.to_json()).unwrap(), c);

        let doc = r#"{"name":"r","function":{"name":"rosenbrock","dim":3,"rotation_seed":5,"x_opt":[1,2,3]},
            "optimizer":{"method":"ags_adam","T":10,"eta0":0.1},
            "smoothing":{"sigma0":[[1,0.1,0],[0.1,1,0],[0,0,2]],"adaptation":{"kind":"cma"},"mc_samples":8},
            "stochastic":{"K":3,"noise_scale":0.1},"seed":7}"#;
        let c = parse_config(doc).unwrap();
        assert_eq!(parse_config(&c.to_json()).unwrap(), c);
        assert_eq!(c.smoothing.adaptation.as_ref().unwrap().mu, Some(4));
    }

    #[test]
    fn powell_dimension_is_reported() {
        let doc = r#"{"function":{"name":"powell","dim":6},"optimizer":{"method":"ags_gd","T":10},"seed":1}"#;
        match parse_config(doc) {
            Err(HarnessError::Validation(errs)) => {
                assert_eq!(errs[0].field, "function.dim");
                assert!(errs[0].message.contains("powell requires dim divisible by 4"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let doc = "{\n  \"function\": {\"name\": \"sphere\", \"dim\": 2, \"colour\": 1},\n  \"optimizer\": {\"method\": \"gd\", \"T\": 1}, \"seed\": 1}";
        match parse_config(doc) {
            Err(HarnessError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("colour"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        match parse_config("{\n\"seed\": 1,\n,}") {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_field_errors_are_collected() {
        let doc = r#"{"function":{"name":"sphere","dim":2},"optimizer":{"method":"newton","T":0,"beta":1.5},"seed":1}"#;
        let Err(HarnessError::Validation(errs)) = parse_config(doc) else {
            panic!("expected validation errors")
        };
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["optimizer.method", "optimizer.T", "optimizer.beta"]);
    }

    #[test]
    fn analytic_gradient_needs_quadratic() {
        let doc = r#"{"function":{"name":"rosenbrock","dim":2},"optimizer":{"method":"ags_gd","T":5},"smoothing":{"gradient":"analytic"},"seed":1}"#;
        assert!(matches!(parse_config(doc), Err(HarnessError::Validation(_))));
    }
}

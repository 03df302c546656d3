//! Gradient descent, stochastic gradient descent and Adam on smoothed
//! objectives, their unsmoothed baselines, and a pure covariance-adaptation
//! search, all driven by one run loop.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;

use crate::adaptation::{adapt_or_fallback, AdaptationKind, AdaptationStrategy, CmaParams};
use crate::bounds::{
    certificate_gd_convex_prefix, certificate_gd_nonconvex_prefix, certificate_sgd_prefix, CertificateInputs,
    ThetaSchedule,
};
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::objectives::{FiniteSum, Objective};
use crate::par::Execution;
use crate::rng::RngStream;
use crate::smoothing::{draw_perturbations, smooth_grad_mc_with_samples, DeltaVariant, EvaluatedSample, McConfig};

pub const DEFAULT_ETA_EXPONENT: f64 = 0.6;
pub const DEFAULT_BETA: f64 = 0.9;
pub const DEFAULT_THETA_C: f64 = 0.1;
pub const DEFAULT_THETA_Q: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_ADAPTATION_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub x: DVector<f64>,
    pub t: u64,
    /// First moment (Adam only).
    pub m: DVector<f64>,
    /// Elementwise second moment (Adam only).
    pub v: DVector<f64>,
}

impl OptimizerState {
    pub fn new(x0: DVector<f64>) -> Self {
        let d = x0.len();
        Self {
            x: x0,
            t: 0,
            m: DVector::zeros(d),
            v: DVector::zeros(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// `η_t = η_0 · t^{−p}`.
    PowerLaw { eta0: f64, p: f64 },
}

impl StepSize {
    /// Step size at iteration `t ≥ 1`.
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            StepSize::Constant(eta) => eta,
            StepSize::PowerLaw { eta0, p } => eta0 * (t.max(1) as f64).powf(-p),
        }
    }

    fn validate(&self) -> Result<()> {
        let base = match *self {
            StepSize::Constant(eta) => eta,
            StepSize::PowerLaw { eta0, p } => {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::InvalidArgument(format!("step exponent must be >= 0, got {p}")));
                }
                eta0
            }
        };
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::BadStep(base));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub eta: StepSize,
    /// Constant first-moment factor `β_t ≡ β`.
    pub beta: f64,
    pub theta: ThetaSchedule,
    pub epsilon: f64,
}

impl Schedule {
    /// Constant step `λ` with the default Adam constants.
    pub fn constant(lambda: f64) -> Self {
        Self {
            eta: StepSize::Constant(lambda),
            ..Self::power_law(lambda)
        }
    }

    /// `η_t = η_0 t^{−0.6}`, `β = 0.9`, `θ_t = 1 − 0.1 t^{−1/2}`, `ε = 10⁻⁸`.
    pub fn power_law(eta0: f64) -> Self {
        Self {
            eta: StepSize::PowerLaw {
                eta0,
                p: DEFAULT_ETA_EXPONENT,
            },
            beta: DEFAULT_BETA,
            theta: ThetaSchedule::PowerLaw {
                c: DEFAULT_THETA_C,
                q: DEFAULT_THETA_Q,
            },
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.eta.validate()?;
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        let theta_ok = match self.theta {
            ThetaSchedule::Constant(th) => (0.0..1.0).contains(&th),
            ThetaSchedule::PowerLaw { c, q } => c > 0.0 && c <= 1.0 && q >= 0.0,
        };
        if !theta_ok {
            return Err(Error::InvalidArgument(format!("theta schedule out of range: {:?}", self.theta)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

fn check_gradient(g: &DVector<f64>, t: u64) -> Result<()> {
    if g.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteGradient { t })
    }
}

/// `x ← x − λ·g`.
pub fn ags_gd_step(state: &OptimizerState, grad: &DVector<f64>, lambda: f64) -> Result<OptimizerState> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::BadStep(lambda));
    }
    check_gradient(grad, state.t + 1)?;
    Ok(OptimizerState {
        x: &state.x - grad * lambda,
        t: state.t + 1,
        m: state.m.clone(),
        v: state.v.clone(),
    })
}

/// `x ← x − η_t·g_k` for the gradient of a sampled component.
pub fn ags_sgd_step(state: &OptimizerState, grad_k: &DVector<f64>, eta: f64) -> Result<OptimizerState> {
    ags_gd_step(state, grad_k, eta)
}

/// Adam without bias correction:
/// `m ← βm + (1−β)g`, `v ← θv + (1−θ)g²`, `x ← x − η m/√(v+ε)`.
pub fn ags_adam_step(state: &OptimizerState, grad_k: &DVector<f64>, schedule: &Schedule, t: u64) -> Result<OptimizerState> {
    check_gradient(grad_k, t)?;
    let eta = schedule.eta.at(t);
    let beta = schedule.beta;
    let theta = schedule.theta.at(t);
    let m = &state.m * beta + grad_k * (1.0 - beta);
    let v = state.v.zip_map(grad_k, |v, g| theta * v + (1.0 - theta) * g * g);
    let mut x = state.x.clone();
    for i in 0..x.len() {
        let denom = (v[i] + schedule.epsilon).sqrt();
        if denom == 0.0 {
            if m[i] != 0.0 {
                return Err(Error::DegenerateDenominator { coordinate: i });
            }
            continue;
        }
        x[i] -= eta * m[i] / denom;
    }
    Ok(OptimizerState { x, t, m, v })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    AgsGd,
    AgsSgd,
    AgsAdam,
    Gd,
    Sgd,
    Adam,
    /// Derivative-free search moving to the weighted mean of the elite samples.
    Cma,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::AgsGd,
        Method::AgsSgd,
        Method::AgsAdam,
        Method::Gd,
        Method::Sgd,
        Method::Adam,
        Method::Cma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::AgsGd => "ags_gd",
            Method::AgsSgd => "ags_sgd",
            Method::AgsAdam => "ags_adam",
            Method::Gd => "gd",
            Method::Sgd => "sgd",
            Method::Adam => "adam",
            Method::Cma => "cma",
        }
    }

    pub fn is_smoothed(self) -> bool {
        matches!(self, Method::AgsGd | Method::AgsSgd | Method::AgsAdam)
    }

    /// Samples one component per step.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::AgsSgd | Method::AgsAdam | Method::Sgd | Method::Adam)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// Where the smoothed gradient comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradSource {
    /// Closed form; requires a quadratic objective.
    AnalyticQuadratic,
    Mc { samples: usize, variant: DeltaVariant },
    /// The plain gradient of f, ignoring Σ.
    ExactUnsmoothed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    GdConvex,
    GdNonconvex,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateRequest {
    pub kind: CertificateKind,
    pub l: f64,
    pub x0_dist: f64,
    pub f0_gap: f64,
    pub lambda_sq_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub schedule: Schedule,
    pub grad_source: GradSource,
    pub adaptation: AdaptationStrategy,
    pub horizon: usize,
    pub seed: u64,
    pub execution: Execution,
    /// Stop once the gradient norm drops below this value.
    pub grad_tol: Option<f64>,
    /// Samples drawn for the covariance update when the gradient source provides none.
    pub adaptation_samples: usize,
    pub certificate: Option<CertificateRequest>,
}

impl RunConfig {
    pub fn new(method: Method, schedule: Schedule, grad_source: GradSource, adaptation: AdaptationStrategy, horizon: usize) -> Self {
        Self {
            method,
            schedule,
            grad_source,
            adaptation,
            horizon,
            seed: 0,
            execution: Execution::default(),
            grad_tol: None,
            adaptation_samples: DEFAULT_ADAPTATION_SAMPLES,
            certificate: None,
        }
    }

    fn validate(&self, problem: &FiniteSum, x0: &DVector<f64>) -> Result<()> {
        let d = problem.base().dim();
        if x0.len() != d {
            return Err(Error::DimMismatch {
                expected: d,
                actual: x0.len(),
            });
        }
        if self.adaptation.sigma0.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                actual: self.adaptation.sigma0.dim(),
            });
        }
        if self.horizon == 0 {
            return Err(Error::EmptySchedule);
        }
        self.schedule.validate()?;
        self.adaptation.validate()?;
        if self.adaptation_samples == 0 {
            return Err(Error::InvalidArgument("adaptation_samples must be >= 1".into()));
        }
        let objectives = std::iter::once(problem.base()).chain(problem.components());
        let uses_exact = !self.method.is_smoothed() || self.grad_source == GradSource::ExactUnsmoothed;
        match self.grad_source {
            _ if self.method == Method::Cma => {}
            GradSource::AnalyticQuadratic if self.method.is_smoothed() => {
                if objectives.clone().any(|o| o.quadratic().is_none()) {
                    return Err(Error::InvalidArgument(format!(
                        "analytic smoothed gradients need a quadratic objective, '{}' is not",
                        problem.base().name()
                    )));
                }
            }
            GradSource::Mc { samples: 0, .. } => {
                return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
            }
            _ => {}
        }
        if uses_exact && self.method != Method::Cma && objectives.clone().any(|o| !o.has_gradient()) {
            return Err(Error::InvalidArgument(format!(
                "method {} needs the exact gradient of '{}'",
                self.method,
                problem.base().name()
            )));
        }
        Ok(())
    }
}

/// One line of a run's trajectory, describing `x_t` and `Σ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub t: u64,
    pub f_x: f64,
    pub f_best: f64,
    /// Norm of the gradient used in step t (NaN for the derivative-free search).
    pub grad_norm_est: f64,
    pub grad_stderr_norm: f64,
    pub sigma_opnorm: f64,
    pub sigma_min_eig: f64,
    pub evals_cumulative: u64,
    pub certificate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub f0: f64,
    pub x_final: DVector<f64>,
    /// `x_1, …` in order.
    pub iterates: Vec<DVector<f64>>,
    /// `Σ_1, …` in order.
    pub sigmas: Vec<SpdMatrix>,
    /// Step size used at each iteration.
    pub steps: Vec<f64>,
    /// Set when a step failed; the records stop at the last good iterate.
    pub aborted: Option<Error>,
    /// Iterations at which the covariance update fell back to geometric decay.
    pub adaptation_fallbacks: Vec<(u64, String)>,
}

impl RunOutcome {
    pub fn best_f(&self) -> f64 {
        self.records.last().map_or(self.f0, |r| r.f_best)
    }

    pub fn final_f(&self) -> f64 {
        self.records.last().map_or(self.f0, |r| r.f_x)
    }
}

struct Streams {
    components: RngStream,
    mc: RngStream,
    adaptation: RngStream,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            components: RngStream::named(seed, "components"),
            mc: RngStream::named(seed, "mc"),
            adaptation: RngStream::named(seed, "adaptation"),
        }
    }
}

fn evaluate_samples(obj: &Objective, s: &SpdMatrix, x: &DVector<f64>, n: usize, stream: RngStream) -> Vec<EvaluatedSample> {
    draw_perturbations(x.len(), n, stream)
        .into_iter()
        .map(|u| {
            let value = obj.value(&(x + s.mul_vec(&u)));
            EvaluatedSample { u, value }
        })
        .collect()
}

struct Gradient {
    mean: DVector<f64>,
    stderr_norm: f64,
    samples: Vec<EvaluatedSample>,
}

/// `∇f(x)`; quadratics go through their stored form so that smoothed and
/// plain methods share one arithmetic path.
fn exact_gradient(obj: &Objective, x: &DVector<f64>) -> Gradient {
    let mean = match obj.quadratic() {
        Some(q) => q.gradient(x),
        None => obj.gradient(x).expect("validated: gradient available"),
    };
    Gradient {
        mean,
        stderr_norm: 0.0,
        samples: Vec::new(),
    }
}

fn smoothed_gradient(cfg: &RunConfig, obj: &Objective, s: &SpdMatrix, x: &DVector<f64>, stream: RngStream) -> Result<Gradient> {
    match cfg.grad_source {
        GradSource::AnalyticQuadratic | GradSource::ExactUnsmoothed => Ok(exact_gradient(obj, x)),
        GradSource::Mc { samples, variant } => {
            let mc = McConfig::new(samples, variant, stream).with_execution(cfg.execution);
            let (est, samples) = smooth_grad_mc_with_samples(obj, s, x, &mc)?;
            Ok(Gradient {
                stderr_norm: est.stderr.norm(),
                mean: est.mean,
                samples,
            })
        }
    }
}

/// Runs `cfg.method` from `x0` for `cfg.horizon` iterations.
///
/// Each iteration first moves the smoothing matrix to `Σ_t` and then takes
/// the step with the gradient of `f_{Σ_t}` (or of a sampled component). The
/// covariance update reuses the Monte Carlo samples of the previous gradient
/// estimate when there are any, and otherwise evaluates its own. Identical
/// inputs give bit-identical outcomes.
pub fn run(problem: &FiniteSum, x0: &DVector<f64>, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate(problem, x0)?;
    let base = problem.base();
    let streams = Streams::new(cfg.seed);
    let evals_start = base.evaluations();
    let f0 = base.value_uncounted(x0);

    let mut state = OptimizerState::new(x0.clone());
    let mut sigma = cfg.adaptation.initial()?;
    let mut reuse: Vec<EvaluatedSample> = Vec::new();
    let mut out = RunOutcome {
        records: Vec::with_capacity(cfg.horizon),
        f0,
        x_final: x0.clone(),
        iterates: Vec::with_capacity(cfg.horizon),
        sigmas: Vec::with_capacity(cfg.horizon),
        steps: Vec::with_capacity(cfg.horizon),
        aborted: None,
        adaptation_fallbacks: Vec::new(),
    };
    let mut f_best = f0;

    // The derivative-free search always adapts its covariance.
    let strategy = if cfg.method == Method::Cma && !cfg.adaptation.needs_samples() {
        AdaptationStrategy {
            kind: AdaptationKind::Cma(CmaParams::for_samples(cfg.adaptation_samples)?),
            ..cfg.adaptation.clone()
        }
    } else {
        cfg.adaptation.clone()
    };

    for t in 1..=cfg.horizon as u64 {
        let step = iterate(cfg, problem, &strategy, &streams, &mut state, &mut sigma, &mut reuse, &mut out, t);
        let (grad_norm, stderr_norm, eta) = match step {
            Ok(v) => v,
            Err(e) => {
                out.aborted = Some(e);
                break;
            }
        };
        let f_x = base.value_uncounted(&state.x);
        if f_x < f_best {
            f_best = f_x;
        }
        out.records.push(RunRecord {
            t,
            f_x,
            f_best,
            grad_norm_est: grad_norm,
            grad_stderr_norm: stderr_norm,
            sigma_opnorm: sigma.op_norm(),
            sigma_min_eig: sigma.min_eig(),
            evals_cumulative: base.evaluations() - evals_start,
            certificate: None,
        });
        out.iterates.push(state.x.clone());
        out.sigmas.push(sigma.clone());
        out.steps.push(eta);
        if cfg.grad_tol.is_some_and(|tol| grad_norm < tol) {
            break;
        }
    }
    out.x_final = state.x.clone();
    attach_certificates(cfg, base.dim(), &mut out)?;
    Ok(out)
}

/// One iteration; returns the gradient norm, its standard error and the step size.
#[allow(clippy::too_many_arguments)]
fn iterate(
    cfg: &RunConfig,
    problem: &FiniteSum,
    strategy: &AdaptationStrategy,
    streams: &Streams,
    state: &mut OptimizerState,
    sigma: &mut SpdMatrix,
    reuse: &mut Vec<EvaluatedSample>,
    out: &mut RunOutcome,
    t: u64,
) -> Result<(f64, f64, f64)> {
    let base = problem.base();
    let eta = cfg.schedule.eta.at(t);

    if cfg.method == Method::Cma {
        let AdaptationKind::Cma(params) = &strategy.kind else {
            unreachable!("derivative-free search always runs the covariance update")
        };
        let n = cfg.adaptation_samples.max(params.mu);
        let samples = evaluate_samples(base, sigma, &state.x, n, streams.adaptation.at(t));
        let mut order: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].value.is_finite()).collect();
        order.sort_by(|&i, &j| samples[i].value.total_cmp(&samples[j].value).then(i.cmp(&j)));
        if order.len() >= params.mu {
            let mut shift = DVector::zeros(state.x.len());
            for (w, &i) in params.weights.iter().zip(&order) {
                shift += &samples[i].u * *w;
            }
            state.x += sigma.mul_vec(&shift);
        }
        state.t = t;
        let (next, err) = adapt_or_fallback(strategy, sigma, &samples)?;
        if let Some(e) = err {
            out.adaptation_fallbacks.push((t, e.to_string()));
        }
        *sigma = next;
        return Ok((f64::NAN, 0.0, eta));
    }

    if cfg.method.is_smoothed() {
        if strategy.needs_samples() && reuse.is_empty() {
            *reuse = evaluate_samples(base, sigma, &state.x, cfg.adaptation_samples, streams.adaptation.at(t));
        }
        let (next, err) = adapt_or_fallback(strategy, sigma, reuse)?;
        if let Some(e) = err {
            out.adaptation_fallbacks.push((t, e.to_string()));
        }
        *sigma = next;
        reuse.clear();
    }

    let obj = if cfg.method.is_stochastic() {
        let k = streams.components.at(t).rng().random_range(0..problem.len());
        problem.component(k)
    } else {
        base
    };

    let grad = if cfg.method.is_smoothed() {
        smoothed_gradient(cfg, obj, sigma, &state.x, streams.mc.at(t))?
    } else {
        exact_gradient(obj, &state.x)
    };

    *state = match cfg.method {
        Method::AgsGd | Method::Gd => ags_gd_step(state, &grad.mean, eta)?,
        Method::AgsSgd | Method::Sgd => ags_sgd_step(state, &grad.mean, eta)?,
        Method::AgsAdam | Method::Adam => ags_adam_step(state, &grad.mean, &cfg.schedule, t)?,
        Method::Cma => unreachable!("handled above"),
    };
    if strategy.needs_samples() {
        *reuse = grad.samples;
    }
    Ok((grad.mean.norm(), grad.stderr_norm, eta))
}

fn attach_certificates(cfg: &RunConfig, dim: usize, out: &mut RunOutcome) -> Result<()> {
    let Some(req) = cfg.certificate else {
        return Ok(());
    };
    if out.sigmas.is_empty() {
        return Ok(());
    }
    let steps = match req.kind {
        CertificateKind::Sgd => out.steps.clone(),
        _ => vec![out.steps[0]],
    };
    let mut inputs = CertificateInputs::new(req.l, dim, steps, out.sigmas.clone());
    inputs.x0_dist = req.x0_dist;
    inputs.f0_gap = req.f0_gap;
    inputs.lambda_sq_bound = req.lambda_sq_bound;
    let values = match req.kind {
        CertificateKind::GdConvex => certificate_gd_convex_prefix(&inputs)?,
        CertificateKind::GdNonconvex => certificate_gd_nonconvex_prefix(&inputs)?,
        CertificateKind::Sgd => certificate_sgd_prefix(&inputs)?,
    };
    for (r, v) in out.records.iter_mut().zip(values) {
        r.certificate = Some(v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_benchmark, make_finite_sum, Benchmark};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_vec(xs.to_vec())
    }

    fn sphere(d: usize) -> Objective {
        make_benchmark(Benchmark::Sphere, d, None, DVector::zeros(d)).unwrap()
    }

    #[test]
    fn gd_step_examples() {
        let s = OptimizerState::new(v(&[1.0, 0.0]));
        let g = sphere(2).quadratic().unwrap().gradient(&s.x);
        let next = ags_gd_step(&s, &g, 0.25).unwrap();
        assert_eq!(next.x, v(&[0.5, 0.0]));
        assert_eq!(next.t, 1);
        assert_eq!(ags_gd_step(&s, &DVector::zeros(2), 0.1).unwrap().x, s.x);
        assert_eq!(
            ags_gd_step(&s, &v(&[f64::NAN, 0.0]), 0.1),
            Err(Error::NonFiniteGradient { t: 1 })
        );
    }

    #[test]
    fn adam_step_examples() {
        let sign = Schedule {
            eta: StepSize::Constant(0.3),
            beta: 0.0,
            theta: ThetaSchedule::Constant(0.0),
            epsilon: 0.0,
        };
        let s = OptimizerState::new(v(&[1.0, 1.0, 1.0]));
        let next = ags_adam_step(&s, &v(&[2.0, -0.5, 1e-3]), &sign, 1).unwrap();
        assert_eq!(next.x, v(&[0.7, 1.3, 0.7]));

        let sch = Schedule {
            eta: StepSize::Constant(0.1),
            beta: 0.9,
            theta: ThetaSchedule::Constant(0.999),
            epsilon: 0.0,
        };
        let next = ags_adam_step(&OptimizerState::new(v(&[0.0])), &v(&[1.0]), &sch, 1).unwrap();
        assert!((next.m[0] - 0.1).abs() < 1e-15);
        assert!((next.v[0] - 0.001).abs() < 1e-15);
        assert!((next.x[0] + 0.31623).abs() < 1e-5);

        let eps = Schedule { epsilon: 1e-8, ..sch };
        let next = ags_adam_step(&OptimizerState::new(v(&[4.0])), &v(&[0.0]), &eps, 1).unwrap();
        assert_eq!(next.x, v(&[4.0]));

        // m ≠ 0 but v = 0 in a coordinate, with ε = 0.
        let state = OptimizerState {
            x: v(&[0.0]),
            t: 0,
            m: v(&[1.0]),
            v: v(&[0.0]),
        };
        let z = Schedule {
            theta: ThetaSchedule::Constant(0.0),
            ..sch
        };
        assert_eq!(
            ags_adam_step(&state, &v(&[0.0]), &z, 1),
            Err(Error::DegenerateDenominator { coordinate: 0 })
        );
    }

    fn geometric(d: usize, gamma: f64) -> AdaptationStrategy {
        AdaptationStrategy::new(AdaptationKind::Geometric { gamma }, SpdMatrix::identity(d))
    }

    #[test]
    fn gd_on_sphere_contracts() {
        let f = FiniteSum::single(sphere(10));
        let x0 = DVector::from_element(10, 1.0);
        let cfg = RunConfig::new(Method::AgsGd, Schedule::constant(0.25), GradSource::AnalyticQuadratic, geometric(10, 0.9), 100);
        let out = run(&f, &x0, &cfg).unwrap();
        assert_eq!(out.records.len(), 100);
        assert!(out.final_f() < 1e-6 * out.f0);
        assert!((out.sigmas[0].op_norm() - 0.9).abs() < 1e-15);
        assert!((out.sigmas[9].op_norm() - 0.9f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn smoothed_and_plain_gd_agree_on_quadratics() {
        let f = FiniteSum::single(make_benchmark(Benchmark::Ellipsoidal, 3, Some(4), v(&[0.1, 0.2, 0.3])).unwrap());
        let x0 = v(&[1.0, -1.0, 0.5]);
        let strat = AdaptationStrategy::new(AdaptationKind::Fixed, SpdMatrix::isotropic(3, 1e-8).unwrap());
        let a = run(&f, &x0, &RunConfig::new(Method::AgsGd, Schedule::constant(1e-7), GradSource::AnalyticQuadratic, strat.clone(), 30)).unwrap();
        let b = run(&f, &x0, &RunConfig::new(Method::Gd, Schedule::constant(1e-7), GradSource::AnalyticQuadratic, strat, 30)).unwrap();
        assert_eq!(a.iterates, b.iterates);
    }

    #[test]
    fn runs_are_deterministic() {
        let f = make_finite_sum(make_benchmark(Benchmark::Rosenbrock, 4, Some(2), DVector::zeros(4)).unwrap(), 4, 0.1, 3).unwrap();
        let x0 = DVector::from_element(4, 0.3);
        let strat = AdaptationStrategy::new(AdaptationKind::Cma(CmaParams::for_samples(16).unwrap()), SpdMatrix::isotropic(4, 0.5).unwrap());
        let mut cfg = RunConfig::new(
            Method::AgsAdam,
            Schedule::power_law(0.05),
            GradSource::Mc {
                samples: 16,
                variant: DeltaVariant::Central,
            },
            strat,
            40,
        );
        cfg.seed = 99;
        let a = run(&f, &x0, &cfg).unwrap();
        let b = run(&f, &x0, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.iterates, b.iterates);
        cfg.execution = Execution::Sequential;
        let c = run(&f, &x0, &cfg).unwrap();
        assert_eq!(a.records, c.records);
    }

    #[test]
    fn sgd_with_single_component_matches_gd() {
        let f = FiniteSum::single(sphere(3));
        let x0 = v(&[1.0, 2.0, 3.0]);
        let gd = run(&f, &x0, &RunConfig::new(Method::AgsGd, Schedule::constant(0.1), GradSource::AnalyticQuadratic, geometric(3, 0.9), 20)).unwrap();
        let sgd = run(&f, &x0, &RunConfig::new(Method::AgsSgd, Schedule::constant(0.1), GradSource::AnalyticQuadratic, geometric(3, 0.9), 20)).unwrap();
        assert_eq!(gd.iterates, sgd.iterates);
    }

    #[test]
    fn noiseless_finite_sum_matches_gd() {
        let f = make_finite_sum(sphere(3), 5, 0.0, 1).unwrap();
        let x0 = v(&[1.0, 2.0, 3.0]);
        let cfg = |m| RunConfig::new(m, Schedule::constant(0.1), GradSource::AnalyticQuadratic, geometric(3, 0.9), 20);
        let gd = run(&f, &x0, &cfg(Method::AgsGd)).unwrap();
        let sgd = run(&f, &x0, &cfg(Method::AgsSgd)).unwrap();
        assert_eq!(gd.iterates, sgd.iterates);
    }

    #[test]
    fn incompatible_gradient_source_is_rejected() {
        let f = FiniteSum::single(make_benchmark(Benchmark::Rosenbrock, 2, None, DVector::zeros(2)).unwrap());
        let cfg = RunConfig::new(Method::AgsGd, Schedule::constant(0.1), GradSource::AnalyticQuadratic, geometric(2, 0.9), 5);
        assert!(matches!(run(&f, &DVector::zeros(2), &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn divergence_aborts_with_partial_records() {
        let f = FiniteSum::single(sphere(2));
        let cfg = RunConfig::new(Method::AgsGd, Schedule::constant(1e154), GradSource::AnalyticQuadratic, geometric(2, 0.9), 50);
        let out = run(&f, &v(&[1.0, 1.0]), &cfg).unwrap();
        assert!(matches!(out.aborted, Some(Error::NonFiniteGradient { .. })));
        assert!(!out.records.is_empty() && out.records.len() < 50);
    }

    #[test]
    fn cma_baseline_improves_and_counts() {
        let f = FiniteSum::single(make_benchmark(Benchmark::Sphere, 4, Some(1), DVector::zeros(4)).unwrap());
        let mut cfg = RunConfig::new(
            Method::Cma,
            Schedule::constant(1.0),
            GradSource::ExactUnsmoothed,
            AdaptationStrategy::new(AdaptationKind::Fixed, SpdMatrix::isotropic(4, 0.5).unwrap()),
            100,
        );
        cfg.adaptation_samples = 12;
        let out = run(&f, &DVector::from_element(4, 1.0), &cfg).unwrap();
        assert!(out.best_f() < 0.1 * out.f0);
        assert_eq!(out.records.last().unwrap().evals_cumulative, 1200);
    }

    #[test]
    fn certificates_are_attached() {
        let f = FiniteSum::single(sphere(2));
        let mut cfg = RunConfig::new(Method::AgsGd, Schedule::constant(0.25), GradSource::AnalyticQuadratic, geometric(2, 0.9), 10);
        cfg.certificate = Some(CertificateRequest {
            kind: CertificateKind::GdConvex,
            l: 2.0,
            x0_dist: 2f64.sqrt(),
            f0_gap: 2.0,
            lambda_sq_bound: 0.0,
        });
        let out = run(&f, &v(&[1.0, 1.0]), &cfg).unwrap();
        for r in &out.records {
            assert!(r.f_x <= r.certificate.unwrap());
        }
    }
}

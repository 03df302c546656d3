//! Gaussian smoothing `f_Σ(x) = π^{−d/2} ∫ f(x + Σu) e^{−‖u‖²} du` and its
//! gradient `∇f_Σ(x) = 2π^{−d/2} Σ⁻¹ ∫ u f(x + Σu) e^{−‖u‖²} du`.
//!
//! Three evaluation routes are provided: closed form for quadratics,
//! tensor-product Gauss–Hermite quadrature for low dimension, and Monte Carlo
//! for everything else. The kernel `e^{−‖u‖²}` is a Gaussian with
//! per-coordinate variance 1/2, and that is the distribution the Monte Carlo
//! estimators sample from.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{sym_sqrt, SpdMatrix};
use crate::objectives::{Objective, QuadraticForm};
use crate::par::{self, Execution};
use crate::rng::RngStream;

/// Largest dimension accepted by the tensor-product quadrature.
pub const MAX_QUADRATURE_DIM: usize = 3;
pub const MIN_QUADRATURE_ORDER: usize = 4;
pub const DEFAULT_QUADRATURE_ORDER: usize = 16;
/// Coefficient on `f(x+Σu) − f(x)` that makes the forward estimator unbiased.
pub const FORWARD_COEFFICIENT: f64 = 2.0;

const SAMPLE_BLOCK: usize = 256;

/// Gauss–Hermite rule for the weight `e^{−u²}` on the real line.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes by Newton iteration on the orthonormal Hermite recurrence.
    pub fn new(order: usize) -> Self {
        const PIM4: f64 = 0.751_125_544_464_942_5; // π^{−1/4}
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0_f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => {
                    let m = (2 * n + 1) as f64;
                    m.sqrt() - 1.85575 * m.powf(-0.16667)
                }
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 3e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Self { nodes, weights }
    }

    /// Weights divided by √π so that they sum to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let s = std::f64::consts::PI.sqrt();
        self.weights.iter().map(|w| w / s).collect()
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimMismatch { expected, actual });
    }
    Ok(())
}

fn check_quadrature(obj_dim: usize, s: &SpdMatrix, x: &DVector<f64>, order: usize) -> Result<()> {
    check_dim(obj_dim, s.dim())?;
    check_dim(obj_dim, x.len())?;
    if obj_dim > MAX_QUADRATURE_DIM {
        return Err(Error::DimTooLarge {
            dim: obj_dim,
            max: MAX_QUADRATURE_DIM,
        });
    }
    if order < MIN_QUADRATURE_ORDER {
        return Err(Error::BadOrder {
            order,
            min: MIN_QUADRATURE_ORDER,
        });
    }
    Ok(())
}

/// Visits every node of the tensor grid with its normalized product weight.
fn for_each_tensor_node(dim: usize, order: usize, mut visit: impl FnMut(&DVector<f64>, f64)) {
    let rule = GaussHermite::new(order);
    let w = rule.normalized_weights();
    let mut idx = vec![0usize; dim];
    let mut u = DVector::zeros(dim);
    loop {
        let mut weight = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            u[k] = rule.nodes[i];
            weight *= w[i];
        }
        visit(&u, weight);
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            idx[k] += 1;
            if idx[k] < order {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `f_Σ(x)` by tensor-product Gauss–Hermite quadrature (dim ≤ 3).
pub fn smooth_value_quadrature(obj: &Objective, s: &SpdMatrix, x: &DVector<f64>, order: usize) -> Result<f64> {
    check_quadrature(obj.dim(), s, x, order)?;
    let mut terms = Vec::with_capacity(order.pow(obj.dim() as u32));
    for_each_tensor_node(obj.dim(), order, |u, w| {
        terms.push(w * obj.value(&(x + s.mul_vec(u))));
    });
    Ok(par::pairwise_sum(&terms))
}

/// `∇f_Σ(x)` by quadrature of the integral representation (no derivatives of f).
pub fn smooth_grad_quadrature(
    obj: &Objective,
    s: &SpdMatrix,
    x: &DVector<f64>,
    order: usize,
) -> Result<DVector<f64>> {
    check_quadrature(obj.dim(), s, x, order)?;
    let d = obj.dim();
    let mut terms = Vec::with_capacity(order.pow(d as u32) * d);
    for_each_tensor_node(d, order, |u, w| {
        let fv = obj.value(&(x + s.mul_vec(u)));
        terms.extend(u.iter().map(|ui| w * fv * ui));
    });
    let integral = DVector::from_vec(par::pairwise_sum_columns(&terms, d));
    Ok(s.inverse() * integral * 2.0)
}

/// Closed form for quadratics: `f_Σ = q(x) + tr(AΣ²)/2` and `∇f_Σ = ∇q(x)`.
pub fn analytic_smooth_quadratic(
    q: &QuadraticForm,
    s: &SpdMatrix,
    x: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    check_dim(q.dim(), s.dim())?;
    check_dim(q.dim(), x.len())?;
    let shift = (q.a.matrix() * s.square().matrix()).trace() / 2.0;
    Ok((q.value(x) + shift, q.gradient(x)))
}

/// Composite smoothing matrix `H = √(Σ² + T²)`, so that `(f_Σ)_T = f_H`.
pub fn compose_smoothing(s: &SpdMatrix, t: &SpdMatrix) -> Result<SpdMatrix> {
    check_dim(s.dim(), t.dim())?;
    sym_sqrt(&s.square().add(&t.square())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaVariant {
    /// `f(x+Σu) − f(x−Σu)`, two evaluations per sample.
    #[default]
    Central,
    /// `2·(f(x+Σu) − f(x))`, one evaluation per sample plus one at x.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub variant: DeltaVariant,
    pub stream: RngStream,
    pub execution: Execution,
}

impl McConfig {
    pub fn new(samples: usize, variant: DeltaVariant, stream: RngStream) -> Self {
        Self {
            samples,
            variant,
            stream,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn at(mut self, counter: u64) -> Self {
        self.stream = self.stream.at(counter);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
        }
        Ok(())
    }
}

/// Monte Carlo estimate of `∇f_Σ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub mean: DVector<f64>,
    /// Per-coordinate sample standard deviation divided by √N.
    pub stderr: DVector<f64>,
    pub samples_used: usize,
}

/// A perturbation `u` together with `f(x + Σu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedSample {
    pub u: DVector<f64>,
    pub value: f64,
}

/// Draws `n` vectors with density `π^{−d/2} e^{−‖u‖²}` from the given stream.
pub fn draw_perturbations(dim: usize, n: usize, stream: RngStream) -> Vec<DVector<f64>> {
    let blocks = n.div_ceil(SAMPLE_BLOCK);
    (0..blocks).flat_map(|b| draw_block(dim, n, b, stream)).collect()
}

fn draw_block(dim: usize, n: usize, block: usize, stream: RngStream) -> Vec<DVector<f64>> {
    let start = block * SAMPLE_BLOCK;
    let len = SAMPLE_BLOCK.min(n - start);
    let mut rng = stream.block_rng(block as u64);
    (0..len)
        .map(|_| {
            DVector::from_fn(dim, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * std::f64::consts::FRAC_1_SQRT_2
            })
        })
        .collect()
}

/// Sample mean and standard error of a list, shifted by the first entry to
/// keep constant inputs exact.
fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let shift = values[0];
    let centered: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let mean = shift + par::pairwise_sum(&centered) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = par::pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Monte Carlo estimate of `f_Σ(x)`: mean and standard error.
pub fn smooth_value_mc(obj: &Objective, s: &SpdMatrix, x: &DVector<f64>, cfg: &McConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    check_dim(obj.dim(), s.dim())?;
    check_dim(obj.dim(), x.len())?;
    let n = cfg.samples;
    let blocks = par::map_indexed(n.div_ceil(SAMPLE_BLOCK), cfg.execution, |b| {
        draw_block(obj.dim(), n, b, cfg.stream)
            .into_iter()
            .map(|u| obj.value(&(x + s.mul_vec(&u))))
            .collect::<Vec<f64>>()
    });
    let values: Vec<f64> = blocks.concat();
    Ok(mean_and_stderr(&values))
}

/// Monte Carlo estimate of `∇f_Σ(x)`.
pub fn smooth_grad_mc(obj: &Objective, s: &SpdMatrix, x: &DVector<f64>, cfg: &McConfig) -> Result<GradientEstimate> {
    smooth_grad_mc_with_samples(obj, s, x, cfg).map(|(g, _)| g)
}

/// Gradient estimate plus the evaluated perturbations, for reuse by covariance adaptation.
pub fn smooth_grad_mc_with_samples(
    obj: &Objective,
    s: &SpdMatrix,
    x: &DVector<f64>,
    cfg: &McConfig,
) -> Result<(GradientEstimate, Vec<EvaluatedSample>)> {
    smooth_grad_mc_scaled(obj, s, x, cfg, FORWARD_COEFFICIENT)
}

/// Gradient estimator with an explicit forward-difference coefficient.
///
/// Only [`FORWARD_COEFFICIENT`] gives an unbiased estimate; other values
/// exist so the verification suite can show that they fail.
pub fn smooth_grad_mc_scaled(
    obj: &Objective,
    s: &SpdMatrix,
    x: &DVector<f64>,
    cfg: &McConfig,
    forward_coefficient: f64,
) -> Result<(GradientEstimate, Vec<EvaluatedSample>)> {
    cfg.validate()?;
    let d = obj.dim();
    check_dim(d, s.dim())?;
    check_dim(d, x.len())?;
    let n = cfg.samples;
    let s_inv: DMatrix<f64> = s.inverse();
    let f_x = match cfg.variant {
        DeltaVariant::Forward => Some(obj.value(x)),
        DeltaVariant::Central => None,
    };

    let blocks = par::map_indexed(n.div_ceil(SAMPLE_BLOCK), cfg.execution, |b| {
        let us = draw_block(d, n, b, cfg.stream);
        let mut contrib = Vec::with_capacity(us.len() * d);
        let mut samples = Vec::with_capacity(us.len());
        for u in us {
            let su = s.mul_vec(&u);
            let f_plus = obj.value(&(x + &su));
            let delta = match f_x {
                None => f_plus - obj.value(&(x - &su)),
                Some(f0) => forward_coefficient * (f_plus - f0),
            };
            let dir = &s_inv * &u;
            contrib.extend(dir.iter().map(|v| delta * v));
            samples.push(EvaluatedSample { u, value: f_plus });
        }
        (contrib, samples)
    });

    let mut contrib = Vec::with_capacity(n * d);
    let mut samples = Vec::with_capacity(n);
    for (c, s) in blocks {
        contrib.extend(c);
        samples.extend(s);
    }

    let mut mean = DVector::zeros(d);
    let mut stderr = DVector::zeros(d);
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| contrib[i * d + j]).collect();
        let (m, se) = mean_and_stderr(&col);
        mean[j] = m;
        stderr[j] = se;
    }
    Ok((
        GradientEstimate {
            mean,
            stderr,
            samples_used: n,
        },
        samples,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::objectives::{make_cosine, make_linear, Benchmark};

    fn sphere(d: usize) -> Objective {
        crate::objectives::make_benchmark(Benchmark::Sphere, d, None, DVector::zeros(d)).unwrap()
    }

    #[test]
    fn hermite_rule_moments() {
        let sp = std::f64::consts::PI.sqrt();
        for n in [4, 8, 16, 32, 64] {
            let r = GaussHermite::new(n);
            let m = |k: i32| r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k)).sum::<f64>();
            assert!((m(0) - sp).abs() < 1e-13, "n={n}");
            assert!(m(1).abs() < 1e-13);
            assert!((m(2) - sp / 2.0).abs() < 1e-13);
            assert!((m(4) - 3.0 * sp / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_constant_is_exact() {
        let f = Objective::from_fn("const", 2, |_| 3.25);
        let s = SpdMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.7])).unwrap();
        let v = smooth_value_quadrature(&f, &s, &DVector::from_vec(vec![1.0, -4.0]), 8).unwrap();
        assert!((v - 3.25).abs() < 1e-14);
    }

    #[test]
    fn quadrature_square_and_cosine() {
        let sq = Objective::from_fn("x2", 1, |x| x[0] * x[0]);
        let s = SpdMatrix::identity(1);
        let x0 = DVector::zeros(1);
        assert!((smooth_value_quadrature(&sq, &s, &x0, 16).unwrap() - 0.5).abs() < 1e-14);

        let c = Objective::from_fn("cos2x", 1, |x| (2.0 * x[0]).cos());
        let v = smooth_value_quadrature(&c, &s, &x0, 16).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn quadrature_argument_errors() {
        let f = sphere(4);
        let s = SpdMatrix::identity(4);
        assert_eq!(
            smooth_value_quadrature(&f, &s, &DVector::zeros(4), 8),
            Err(Error::DimTooLarge { dim: 4, max: 3 })
        );
        let f = sphere(2);
        assert!(matches!(
            smooth_value_quadrature(&f, &SpdMatrix::identity(2), &DVector::zeros(2), 3),
            Err(Error::BadOrder { .. })
        ));
    }

    #[test]
    fn analytic_quadratic_examples() {
        let f = sphere(2);
        let q = f.quadratic().unwrap();
        let (v, g) = analytic_smooth_quadratic(q, &SpdMatrix::identity(2), &DVector::zeros(2)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(g, DVector::zeros(2));
        let quad = smooth_value_quadrature(&f, &SpdMatrix::identity(2), &DVector::zeros(2), 16).unwrap();
        assert!((quad - v).abs() < 1e-10);

        let konst = QuadraticForm::new(SymMatrix::zeros(2), DVector::zeros(2), 4.5).unwrap();
        let s = SpdMatrix::from_diagonal(&[3.0, 0.1]).unwrap();
        let (v, g) = analytic_smooth_quadratic(&konst, &s, &DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(v, 4.5);
        assert_eq!(g, DVector::zeros(2));

        let f1 = sphere(1);
        let s = SpdMatrix::isotropic(1, 2.0).unwrap();
        let x = DVector::from_element(1, 3.0);
        let (v, g) = analytic_smooth_quadratic(f1.quadratic().unwrap(), &s, &x).unwrap();
        assert!((v - 11.0).abs() < 1e-14);
        assert!((g[0] - 6.0).abs() < 1e-14);
        assert!((smooth_value_quadrature(&f1, &s, &x, 16).unwrap() - 11.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_dimension_mismatch() {
        let f = sphere(2);
        assert!(matches!(
            analytic_smooth_quadratic(f.quadratic().unwrap(), &SpdMatrix::identity(3), &DVector::zeros(2)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn mc_value_examples() {
        let stream = RngStream::new(5);
        let c = Objective::from_fn("const", 3, |_| 0.1);
        let cfg = McConfig::new(1000, DeltaVariant::Central, stream);
        let s = SpdMatrix::isotropic(3, 2.0).unwrap();
        let (m, se) = smooth_value_mc(&c, &s, &DVector::zeros(3), &cfg).unwrap();
        assert_eq!(m, 0.1);
        assert_eq!(se, 0.0);

        let lin = make_linear(DVector::from_vec(vec![1.0, -2.0, 0.5]), 0.0);
        let x = DVector::from_vec(vec![0.3, 0.1, -1.0]);
        let cfg = McConfig::new(10_000, DeltaVariant::Central, stream);
        let (m, se) = smooth_value_mc(&lin, &s, &x, &cfg).unwrap();
        assert!((m - lin.value_uncounted(&x)).abs() <= 3.0 * se);

        let sp = sphere(2);
        let cfg = McConfig::new(100_000, DeltaVariant::Central, stream);
        let (m, se) = smooth_value_mc(&sp, &SpdMatrix::identity(2), &DVector::zeros(2), &cfg).unwrap();
        assert!((m - 1.0).abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn mc_gradient_examples() {
        let stream = RngStream::new(11);
        let c = Objective::from_fn("const", 2, |_| 7.0);
        let cfg = McConfig::new(500, DeltaVariant::Central, stream);
        let g = smooth_grad_mc(&c, &SpdMatrix::identity(2), &DVector::zeros(2), &cfg).unwrap();
        assert_eq!(g.mean, DVector::zeros(2));

        let lin = make_linear(DVector::from_vec(vec![1.0, 2.0]), 0.0);
        let s = SpdMatrix::from_diagonal(&[1.0, 3.0]).unwrap();
        let cfg = McConfig::new(100_000, DeltaVariant::Central, stream);
        let g = smooth_grad_mc(&lin, &s, &DVector::zeros(2), &cfg).unwrap();
        for (j, a) in [1.0, 2.0].iter().enumerate() {
            assert!((g.mean[j] - a).abs() <= 3.0 * g.stderr[j]);
        }

        let sp = sphere(2);
        let g = smooth_grad_mc(&sp, &SpdMatrix::identity(2), &DVector::from_vec(vec![1.0, 0.0]), &cfg).unwrap();
        assert!((g.mean[0] - 2.0).abs() <= 3.0 * g.stderr[0]);
        assert!(g.mean[1].abs() <= 3.0 * g.stderr[1]);
        assert_eq!(g.samples_used, 100_000);
    }

    #[test]
    fn mc_counts_evaluations() {
        let f = sphere(2);
        let s = SpdMatrix::identity(2);
        let x = DVector::zeros(2);
        let cfg = McConfig::new(300, DeltaVariant::Central, RngStream::new(1));
        smooth_grad_mc(&f, &s, &x, &cfg).unwrap();
        assert_eq!(f.evaluations(), 600);
        f.reset_evaluations();
        let cfg = McConfig::new(300, DeltaVariant::Forward, RngStream::new(1));
        smooth_grad_mc(&f, &s, &x, &cfg).unwrap();
        assert_eq!(f.evaluations(), 301);
    }

    #[test]
    fn sequential_and_parallel_are_bit_identical() {
        let f = make_cosine(DVector::from_vec(vec![1.0, 0.5, -0.3]), 0.2, 0.0);
        let s = SpdMatrix::from_diagonal(&[0.5, 1.0, 2.0]).unwrap();
        let x = DVector::from_vec(vec![0.1, 0.2, 0.3]);
        let base = McConfig::new(5000, DeltaVariant::Central, RngStream::new(3).at(9));
        let a = smooth_grad_mc(&f, &s, &x, &base.with_execution(Execution::Sequential)).unwrap();
        let b = smooth_grad_mc(&f, &s, &x, &base.with_execution(Execution::Parallel)).unwrap();
        assert_eq!(a, b);
        let va = smooth_value_mc(&f, &s, &x, &base.with_execution(Execution::Sequential)).unwrap();
        let vb = smooth_value_mc(&f, &s, &x, &base.with_execution(Execution::Parallel)).unwrap();
        assert_eq!(va, vb);
    }

    #[test]
    fn compose_examples() {
        let h = compose_smoothing(&SpdMatrix::identity(2), &SpdMatrix::identity(2)).unwrap();
        assert!((h.matrix() - DMatrix::identity(2, 2) * 2f64.sqrt()).amax() < 1e-14);

        let h = compose_smoothing(
            &SpdMatrix::from_diagonal(&[3.0, 1.0]).unwrap(),
            &SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert!((h.matrix()[(0, 0)] - 5.0).abs() < 1e-14);
        assert!((h.matrix()[(1, 1)] - 2f64.sqrt()).abs() < 1e-14);

        let s = SpdMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let t = SpdMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let h = compose_smoothing(&s, &t).unwrap();
        let target = s.square().add(&t.square()).unwrap();
        assert!((h.square().matrix() - target.matrix()).amax() < 1e-12 * target.max_abs());
    }

    #[test]
    fn compose_dimension_mismatch() {
        assert!(matches!(
            compose_smoothing(&SpdMatrix::identity(2), &SpdMatrix::identity(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn quadrature_gradient_matches_closed_form_cosine() {
        let w = DVector::from_vec(vec![1.2, -0.7]);
        let f = make_cosine(w.clone(), 0.4, 0.0);
        let s = SpdMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.2, 0.5])).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.9]);
        let damp = (-(s.mul_vec(&w)).norm_squared() / 4.0).exp();
        let expected = -&w * (w.dot(&x) + 0.4).sin() * damp;
        let g = smooth_grad_quadrature(&f, &s, &x, 24).unwrap();
        assert!((g - expected).amax() < 1e-10);
    }
}

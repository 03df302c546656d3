//! Objective functions: the rotated benchmark set, quadratic forms, and
//! finite-sum stochastic wrappers.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, SymMatrix};
use crate::rng::RngStream;

pub type ValueFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// `xᵀAx + bᵀx + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub a: SymMatrix,
    pub b: DVector<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn new(a: SymMatrix, b: DVector<f64>, c: f64) -> Result<Self> {
        if a.dim() != b.len() {
            return Err(Error::DimMismatch {
                expected: a.dim(),
                actual: b.len(),
            });
        }
        Ok(Self { a, b, c })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.a.mul_vec(x)) + self.b.dot(x) + self.c
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.mul_vec(x) * 2.0 + &self.b
    }

    /// Lipschitz constant of the gradient, `2‖A‖`.
    pub fn smoothness(&self) -> f64 {
        2.0 * operator_norm(&self.a).expect("finite quadratic")
    }

    pub fn is_convex(&self) -> bool {
        crate::linalg::min_eigenvalue(&self.a).map(|m| m >= -1e-12 * self.a.max_abs()).unwrap_or(false)
    }

    /// The same form with an extra linear term `shiftᵀx`.
    pub fn shifted(&self, shift: &DVector<f64>) -> Self {
        Self {
            a: self.a.clone(),
            b: &self.b + shift,
            c: self.c,
        }
    }

    pub fn into_objective(self, name: &str) -> Objective {
        let q_val = self.clone();
        let q_grad = self.clone();
        let l = self.smoothness();
        let convex = self.is_convex();
        let mut obj = Objective::from_fn(name, self.dim(), move |x| q_val.value(x))
            .with_gradient(move |x| q_grad.gradient(x))
            .with_smoothness(l);
        obj.convex = convex;
        obj.quadratic = Some(self);
        obj
    }
}

/// A black-box objective with optional analytic metadata.
///
/// Clones share the evaluation counter.
#[derive(Clone)]
pub struct Objective {
    name: String,
    dim: usize,
    value_fn: ValueFn,
    grad_fn: Option<GradFn>,
    smoothness: Option<f64>,
    f_star: Option<f64>,
    x_opt: Option<DVector<f64>>,
    quadratic: Option<QuadraticForm>,
    convex: bool,
    evals: Arc<AtomicU64>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("has_gradient", &self.grad_fn.is_some())
            .field("smoothness", &self.smoothness)
            .field("f_star", &self.f_star)
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

impl Objective {
    pub fn from_fn<F>(name: &str, dim: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            dim,
            value_fn: Arc::new(f),
            grad_fn: None,
            smoothness: None,
            f_star: None,
            x_opt: None,
            quadratic: None,
            convex: false,
            evals: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.grad_fn = Some(Arc::new(g));
        self
    }

    pub fn with_smoothness(mut self, l: f64) -> Self {
        self.smoothness = Some(l);
        self
    }

    pub fn with_minimum(mut self, f_star: f64, x_opt: DVector<f64>) -> Self {
        self.f_star = Some(f_star);
        self.x_opt = Some(x_opt);
        self
    }

    pub fn with_convexity(mut self, convex: bool) -> Self {
        self.convex = convex;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates f and counts the evaluation.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        (self.value_fn)(x)
    }

    /// Evaluates f without touching the counter (logging, diagnostics).
    pub fn value_uncounted(&self, x: &DVector<f64>) -> f64 {
        (self.value_fn)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.grad_fn.as_ref().map(|g| g(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad_fn.is_some()
    }

    pub fn smoothness(&self) -> Option<f64> {
        self.smoothness
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    pub fn x_opt(&self) -> Option<&DVector<f64>> {
        self.x_opt.as_ref()
    }

    pub fn quadratic(&self) -> Option<&QuadraticForm> {
        self.quadratic.as_ref()
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }

    /// `f(x) + shiftᵀx`, sharing this objective's counter.
    pub fn with_linear_shift(&self, shift: DVector<f64>, name: &str) -> Objective {
        let base_v = self.value_fn.clone();
        let s_v = shift.clone();
        let mut out = Objective {
            name: name.to_string(),
            dim: self.dim,
            value_fn: Arc::new(move |x| base_v(x) + s_v.dot(x)),
            grad_fn: None,
            smoothness: self.smoothness,
            f_star: None,
            x_opt: None,
            quadratic: self.quadratic.as_ref().map(|q| q.shifted(&shift)),
            convex: self.convex,
            evals: self.evals.clone(),
        };
        if let Some(g) = self.grad_fn.clone() {
            let s_g = shift;
            out.grad_fn = Some(Arc::new(move |x| g(x) + &s_g));
        }
        out
    }
}

const CURVATURE_ITERATIONS: usize = 30;

/// Estimate of the local smoothness constant at `x`: the largest absolute
/// Hessian eigenvalue, by power iteration on finite differences of the
/// gradient (itself finite differences of values when no gradient is known).
///
/// Evaluations made here are not counted.
pub fn estimate_smoothness(obj: &Objective, x: &DVector<f64>) -> Result<f64> {
    let d = obj.dim();
    if x.len() != d {
        return Err(Error::DimMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    let h = 1e-4 * x.norm().max(1.0);
    let grad = |y: &DVector<f64>| match obj.grad_fn.as_ref() {
        Some(g) => g(y),
        None => DVector::from_fn(d, |i, _| {
            let mut up = y.clone();
            let mut down = y.clone();
            up[i] += h;
            down[i] -= h;
            ((obj.value_fn)(&up) - (obj.value_fn)(&down)) / (2.0 * h)
        }),
    };
    let mut v = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..CURVATURE_ITERATIONS {
        let hv = (grad(&(x + &v * h)) - grad(&(x - &v * h))) / (2.0 * h);
        let norm = hv.norm();
        if !norm.is_finite() {
            return Err(Error::InvalidArgument("curvature estimate is not finite".into()));
        }
        if norm == 0.0 {
            break;
        }
        estimate = norm;
        v = hv / norm;
    }
    Ok(estimate)
}

/// Linear objective `aᵀx + c`.
pub fn make_linear(a: DVector<f64>, c: f64) -> Objective {
    let d = a.len();
    QuadraticForm::new(SymMatrix::zeros(d), a, c)
        .expect("dimensions agree")
        .into_objective("linear")
}

/// `offset + cos(wᵀx + phase)`, which is `‖w‖²`-smooth.
///
/// Its smoothed version has the closed form
/// `offset + exp(−wᵀΣ²w / 4) · cos(wᵀx + phase)`.
pub fn make_cosine(w: DVector<f64>, phase: f64, offset: f64) -> Objective {
    let d = w.len();
    let l = w.norm_squared();
    let wv = w.clone();
    Objective::from_fn("cosine", d, move |x| offset + (wv.dot(x) + phase).cos())
        .with_gradient(move |x| -&w * (w.dot(x) + phase).sin())
        .with_smoothness(l)
}

/// The benchmark set, in list order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Sphere,
    Ellipsoidal,
    DiffPowers,
    Powell,
    Rosenbrock,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [
        Benchmark::Sphere,
        Benchmark::Ellipsoidal,
        Benchmark::DiffPowers,
        Benchmark::Powell,
        Benchmark::Rosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Ellipsoidal => "ellipsoidal",
            Benchmark::DiffPowers => "diff_powers",
            Benchmark::Powell => "powell",
            Benchmark::Rosenbrock => "rosenbrock",
        }
    }

    /// Box from which initial points are drawn.
    pub fn init_domain(self) -> (f64, f64) {
        match self {
            Benchmark::Sphere | Benchmark::Ellipsoidal => (-2.0, 2.0),
            Benchmark::DiffPowers => (-5.0, 5.0),
            Benchmark::Powell => (-4.0, 5.0),
            Benchmark::Rosenbrock => (-5.0, 10.0),
        }
    }

    pub fn check_dim(self, dim: usize) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::BadDimension {
                function: self.name().to_string(),
                reason: reason.to_string(),
            })
        };
        match self {
            _ if dim == 0 => bad("dim must be >= 1"),
            Benchmark::Powell if !dim.is_multiple_of(4) => bad("powell requires dim divisible by 4"),
            Benchmark::Rosenbrock if dim < 2 => bad("rosenbrock requires dim >= 2"),
            Benchmark::DiffPowers if dim < 2 => bad("diff_powers requires dim >= 2"),
            _ => Ok(()),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Seeded random orthogonal matrix: QR of a Gaussian matrix with the signs
/// fixed so that R has a positive diagonal.
pub fn make_rotation(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = RngStream::named(seed, "rotation").rng();
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            let neg = -q.column(j);
            q.set_column(j, &neg);
        }
    }
    q
}

fn ellipsoid_coefficients(dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    (0..dim).map(|i| 10f64.powf(6.0 * i as f64 / (dim - 1) as f64)).collect()
}

fn diff_powers_exponents(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| 2.0 + 4.0 * i as f64 / (dim - 1) as f64).collect()
}

fn sphere_z(z: &DVector<f64>) -> (f64, DVector<f64>) {
    (z.norm_squared(), z * 2.0)
}

fn ellipsoidal_z(z: &DVector<f64>, coef: &[f64]) -> (f64, DVector<f64>) {
    let v = z.iter().zip(coef).map(|(zi, c)| c * zi * zi).sum();
    let g = DVector::from_iterator(z.len(), z.iter().zip(coef).map(|(zi, c)| 2.0 * c * zi));
    (v, g)
}

fn diff_powers_z(z: &DVector<f64>, exps: &[f64]) -> (f64, DVector<f64>) {
    let s: f64 = z.iter().zip(exps).map(|(zi, p)| zi.abs().powf(*p)).sum();
    let v = s.sqrt();
    let g = if v > 0.0 {
        DVector::from_iterator(
            z.len(),
            z.iter()
                .zip(exps)
                .map(|(zi, p)| p * zi.abs().powf(p - 1.0) * zi.signum() / (2.0 * v)),
        )
    } else {
        DVector::zeros(z.len())
    };
    (v, g)
}

fn powell_z(z: &DVector<f64>) -> (f64, DVector<f64>) {
    let mut v = 0.0;
    let mut g = DVector::zeros(z.len());
    for k in 0..z.len() / 4 {
        let i = 4 * k;
        let (a, b, c, d) = (z[i], z[i + 1], z[i + 2], z[i + 3]);
        let t1 = a + 10.0 * b;
        let t2 = c - d;
        let t3 = b - 2.0 * c;
        let t4 = a - d;
        v += t1 * t1 + 5.0 * t2 * t2 + t3.powi(4) + 10.0 * t4.powi(4);
        g[i] += 2.0 * t1 + 40.0 * t4.powi(3);
        g[i + 1] += 20.0 * t1 + 4.0 * t3.powi(3);
        g[i + 2] += 10.0 * t2 - 8.0 * t3.powi(3);
        g[i + 3] += -10.0 * t2 - 40.0 * t4.powi(3);
    }
    (v, g)
}

// Standard Rosenbrock evaluated at z + 1, so the minimizer sits at z = 0.
fn rosenbrock_z(z: &DVector<f64>) -> (f64, DVector<f64>) {
    let w = z.add_scalar(1.0);
    let d = w.len();
    let mut v = 0.0;
    let mut g = DVector::zeros(d);
    for i in 0..d - 1 {
        let r = w[i + 1] - w[i] * w[i];
        let s = w[i] - 1.0;
        v += 100.0 * r * r + s * s;
        g[i] += -400.0 * w[i] * r + 2.0 * s;
        g[i + 1] += 200.0 * r;
    }
    (v, g)
}

/// Builds a benchmark evaluated at `z = R(x − x_opt)`.
///
/// `rotation_seed = None` uses the identity rotation.
pub fn make_benchmark(
    bench: Benchmark,
    dim: usize,
    rotation_seed: Option<u64>,
    x_opt: DVector<f64>,
) -> Result<Objective> {
    bench.check_dim(dim)?;
    if x_opt.len() != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            actual: x_opt.len(),
        });
    }
    let rot = match rotation_seed {
        Some(seed) => make_rotation(dim, seed),
        None => DMatrix::identity(dim, dim),
    };

    let core: Arc<dyn Fn(&DVector<f64>) -> (f64, DVector<f64>) + Send + Sync> = match bench {
        Benchmark::Sphere => Arc::new(sphere_z),
        Benchmark::Ellipsoidal => {
            let coef = ellipsoid_coefficients(dim);
            Arc::new(move |z| ellipsoidal_z(z, &coef))
        }
        Benchmark::DiffPowers => {
            let exps = diff_powers_exponents(dim);
            Arc::new(move |z| diff_powers_z(z, &exps))
        }
        Benchmark::Powell => Arc::new(powell_z),
        Benchmark::Rosenbrock => Arc::new(rosenbrock_z),
    };

    let to_z = {
        let rot = rot.clone();
        let x_opt = x_opt.clone();
        move |x: &DVector<f64>| &rot * (x - &x_opt)
    };
    let to_z_g = to_z.clone();
    let core_v = core.clone();
    let rot_t = rot.transpose();

    let mut obj = Objective::from_fn(bench.name(), dim, move |x| core_v(&to_z(x)).0)
        .with_gradient(move |x| &rot_t * core(&to_z_g(x)).1)
        .with_minimum(0.0, x_opt.clone());

    match bench {
        Benchmark::Sphere | Benchmark::Ellipsoidal => {
            let coef = DVector::from_vec(ellipsoid_coefficients(dim));
            let coef = if bench == Benchmark::Sphere {
                DVector::from_element(dim, 1.0)
            } else {
                coef
            };
            let a = SymMatrix::new(rot.transpose() * DMatrix::from_diagonal(&coef) * &rot)?;
            let ax = a.mul_vec(&x_opt);
            let q = QuadraticForm::new(a, -&ax * 2.0, x_opt.dot(&ax))?;
            obj.smoothness = Some(2.0 * coef.max());
            obj.quadratic = Some(q);
            obj.convex = true;
        }
        Benchmark::DiffPowers | Benchmark::Powell => obj.convex = true,
        Benchmark::Rosenbrock => {}
    }
    Ok(obj)
}

pub fn make_benchmark_by_name(
    name: &str,
    dim: usize,
    rotation_seed: Option<u64>,
    x_opt: DVector<f64>,
) -> Result<Objective> {
    make_benchmark(name.parse()?, dim, rotation_seed, x_opt)
}

/// `f = (1/K) Σ_k f_k` with `f_k(x) = f(x) + ξ_kᵀx` and `Σ_k ξ_k = 0`.
#[derive(Debug, Clone)]
pub struct FiniteSum {
    base: Objective,
    shifts: Vec<DVector<f64>>,
    components: Vec<Objective>,
}

impl FiniteSum {
    pub fn base(&self) -> &Objective {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn shifts(&self) -> &[DVector<f64>] {
        &self.shifts
    }

    pub fn component(&self, k: usize) -> &Objective {
        &self.components[k]
    }

    pub fn components(&self) -> &[Objective] {
        &self.components
    }

    /// A finite sum with a single, unshifted component.
    pub fn single(base: Objective) -> Self {
        let shift = DVector::zeros(base.dim());
        let component = base.with_linear_shift(shift.clone(), base.name());
        Self {
            base,
            shifts: vec![shift],
            components: vec![component],
        }
    }
}

/// Draws K Gaussian linear shifts with standard deviation `noise_scale`,
/// re-centered so that they sum to zero.
pub fn make_finite_sum(base: Objective, k: usize, noise_scale: f64, seed: u64) -> Result<FiniteSum> {
    if k == 0 {
        return Err(Error::InvalidArgument("finite sum needs K >= 1".into()));
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise_scale must be >= 0, got {noise_scale}")));
    }
    let d = base.dim();
    let mut rng = RngStream::named(seed, "finite_sum").rng();
    let mut shifts: Vec<DVector<f64>> = (0..k)
        .map(|_| DVector::from_fn(d, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise_scale * z
        }))
        .collect();
    let mean = shifts.iter().fold(DVector::zeros(d), |acc, s| acc + s) / k as f64;
    for s in &mut shifts {
        *s -= &mean;
    }
    let components = shifts
        .iter()
        .enumerate()
        .map(|(i, s)| base.with_linear_shift(s.clone(), &format!("{}[{}]", base.name(), i)))
        .collect();
    Ok(FiniteSum {
        base,
        shifts,
        components,
    })
}

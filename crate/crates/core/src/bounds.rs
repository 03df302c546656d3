//! Smoothing gaps, bounds between smoothing matrices, and convergence certificates.
//!
//! Everything here is a closed-form function of `L` (smoothness constant),
//! `d` (dimension) and spectral quantities of the smoothing matrices.

use crate::error::{Error, Result};
use crate::linalg::{classify_pair, operator_norm, SpdMatrix};

/// Upper bounds on the distance between a function and its smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// Bound on `|f_Σ(x) − f(x)|`.
    pub value_gap: f64,
    /// Bound on `‖∇f_Σ(x) − ∇f(x)‖`.
    pub grad_gap: f64,
}

fn check_l(l: f64) -> Result<()> {
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!("smoothness constant must be finite and nonnegative, got {l}")));
    }
    Ok(())
}

fn check_pair(s: &SpdMatrix, t: &SpdMatrix) -> Result<()> {
    if s.dim() != t.dim() {
        return Err(Error::DimMismatch {
            expected: s.dim(),
            actual: t.dim(),
        });
    }
    Ok(())
}

/// `‖Σ‖²‖Σ⁻¹‖`, the spectral factor of the gradient gap.
fn grad_factor(s: &SpdMatrix) -> f64 {
    s.op_norm().powi(2) * s.inv_norm()
}

pub fn lemma3_gaps(l: f64, d: usize, s: &SpdMatrix) -> GapReport {
    let d = d as f64;
    GapReport {
        value_gap: l * d * s.op_norm().powi(2) / 4.0,
        grad_gap: l * grad_factor(s) * ((3.0 + d) / 2.0).powf(1.5),
    }
}

/// Upper bound on `‖∇f(x)‖²` from the squared norm of the smoothed gradient.
pub fn corollary_grad_bound(l: f64, d: usize, s: &SpdMatrix, smoothed_grad_sq: f64) -> f64 {
    let d = d as f64;
    2.0 * smoothed_grad_sq + l * l * grad_factor(s).powi(2) * (3.0 + d).powi(3) / 4.0
}

/// Bound for the case where one of `Σ²`, `T²` dominates the other.
pub fn value_diff_dominance(l: f64, d: usize, s: &SpdMatrix, t: &SpdMatrix) -> Result<f64> {
    check_pair(s, t)?;
    let diff = t.square().sub(&s.square())?;
    Ok(l * d as f64 * operator_norm(&diff)? / 4.0)
}

/// Eigenvalues of `Σ²` and `T²` paired along a shared eigenbasis.
///
/// Only meaningful when the two matrices commute. Each eigenvector of `Σ` is
/// pushed through `T²` as a Rayleigh quotient, which is exact in that case.
fn paired_square_eigenvalues(s: &SpdMatrix, t: &SpdMatrix) -> Vec<(f64, f64)> {
    let v = s.eigenvectors();
    let t2 = t.square();
    (0..s.dim())
        .map(|i| {
            let col = v.column(i).into_owned();
            let sigma = s.eigenvalues()[i].powi(2);
            let tau = col.dot(&(t2.matrix() * &col));
            (sigma, tau)
        })
        .collect()
}

/// Bound for commuting `Σ`, `T`: `Ld/4 · (max_i (σ_i − τ_i)⁺ + max_i (τ_i − σ_i)⁺)`
/// with `σ_i`, `τ_i` the paired eigenvalues of `Σ²`, `T²`.
///
/// Returns `None` when the matrices do not commute.
pub fn value_diff_codiagonal(l: f64, d: usize, s: &SpdMatrix, t: &SpdMatrix) -> Result<Option<f64>> {
    check_pair(s, t)?;
    if !classify_pair(s, t)?.codiagonalizable {
        return Ok(None);
    }
    let (up, down) = paired_square_eigenvalues(s, t)
        .into_iter()
        .fold((0.0f64, 0.0f64), |(up, down), (sg, tu)| (up.max(sg - tu), down.max(tu - sg)));
    Ok(Some(l * d as f64 * (up + down) / 4.0))
}

/// The commuting-case bound with squared differences,
/// `Ld/4 · (max_i ((σ_i − τ_i)⁺)² + max_i ((τ_i − σ_i)⁺)²)`.
///
/// Kept for reference only: it underestimates the true gap whenever the
/// eigenvalue differences are below one, so [`bound_value_diff`] never uses it.
pub fn value_diff_codiagonal_squared(l: f64, d: usize, s: &SpdMatrix, t: &SpdMatrix) -> Result<Option<f64>> {
    check_pair(s, t)?;
    if !classify_pair(s, t)?.codiagonalizable {
        return Ok(None);
    }
    let (up, down) = paired_square_eigenvalues(s, t)
        .into_iter()
        .fold((0.0f64, 0.0f64), |(up, down), (sg, tu)| (up.max(sg - tu), down.max(tu - sg)));
    Ok(Some(l * d as f64 * (up * up + down * down) / 4.0))
}

/// Bound valid for any pair: `Ld/4 · (‖Σ²‖ + ‖T²‖ − 2 min(λ_min(Σ²), λ_min(T²)))`.
pub fn value_diff_general(l: f64, d: usize, s: &SpdMatrix, t: &SpdMatrix) -> Result<f64> {
    check_pair(s, t)?;
    let s2 = s.op_norm().powi(2);
    let t2 = t.op_norm().powi(2);
    let lo = s.min_eig().powi(2).min(t.min_eig().powi(2));
    Ok(l * d as f64 * (s2 + t2 - 2.0 * lo).max(0.0) / 4.0)
}

/// Tightest available bound on `|f_Σ(x) − f_T(x)|` over all x.
///
/// The arguments are put in a canonical order first, so the result is
/// bitwise symmetric in `Σ` and `T`.
pub fn bound_value_diff(l: f64, d: usize, s: &SpdMatrix, t: &SpdMatrix) -> Result<f64> {
    check_pair(s, t)?;
    if s.matrix() == t.matrix() {
        return Ok(0.0);
    }
    let (s, t) = if canonical_cmp(s, t).is_gt() { (t, s) } else { (s, t) };
    let class = classify_pair(s, t)?;
    let mut best = value_diff_general(l, d, s, t)?;
    if class.s_dominates || class.t_dominates {
        best = best.min(value_diff_dominance(l, d, s, t)?);
    }
    if class.codiagonalizable {
        if let Some(b) = value_diff_codiagonal(l, d, s, t)? {
            best = best.min(b);
        }
    }
    Ok(best)
}

fn canonical_cmp(s: &SpdMatrix, t: &SpdMatrix) -> std::cmp::Ordering {
    s.matrix()
        .iter()
        .zip(t.matrix().iter())
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Bound on `|f_Σ(x) − f_T(x)|` where `T` may be absent, meaning no smoothing.
fn bound_value_diff_opt(l: f64, d: usize, s: &SpdMatrix, t: Option<&SpdMatrix>) -> Result<f64> {
    match t {
        Some(t) => bound_value_diff(l, d, s, t),
        None => Ok(lemma3_gaps(l, d, s).value_gap),
    }
}

/// Bound on `‖∇f_Σ(x) − ∇f_T(x)‖`.
pub fn bound_grad_diff(l: f64, d: usize, s: &SpdMatrix, t: &SpdMatrix) -> Result<f64> {
    check_pair(s, t)?;
    Ok(l * ((3.0 + d as f64) / 2.0).powf(1.5) * (grad_factor(s) + grad_factor(t)))
}

/// Inputs shared by the certificate functions.
#[derive(Debug, Clone)]
pub struct CertificateInputs {
    /// Smoothness constant.
    pub l: f64,
    pub dim: usize,
    /// Step sizes `η_1..η_T`; a single entry is the constant step `λ`.
    pub steps: Vec<f64>,
    /// `Σ_1..Σ_T`.
    pub sigmas: Vec<SpdMatrix>,
    /// `Σ_0`. `None` means the unsmoothed function, so the first switching
    /// term is the plain smoothing gap of `Σ_1`.
    pub sigma_zero: Option<SpdMatrix>,
    /// `Σ_{T+1}` for the nonconvex gradient-descent certificate; `None` adds nothing.
    pub sigma_next: Option<SpdMatrix>,
    /// `‖x_0 − x_*‖`.
    pub x0_dist: f64,
    /// `f(x_0) − f_*` (measured against `f_{Σ_0}` when `sigma_zero` is set).
    pub f0_gap: f64,
    /// Uniform bound on the expected squared component gradient norm.
    pub lambda_sq_bound: f64,
}

impl CertificateInputs {
    pub fn new(l: f64, dim: usize, steps: Vec<f64>, sigmas: Vec<SpdMatrix>) -> Self {
        Self {
            l,
            dim,
            steps,
            sigmas,
            sigma_zero: None,
            sigma_next: None,
            x0_dist: 0.0,
            f0_gap: 0.0,
            lambda_sq_bound: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        check_l(self.l)?;
        if self.sigmas.is_empty() {
            return Err(Error::EmptySchedule);
        }
        if let Some(&bad) = self.steps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::BadStep(bad));
        }
        if self.steps.is_empty() {
            return Err(Error::EmptySchedule);
        }
        if self.steps.len() != 1 && self.steps.len() != self.sigmas.len() {
            return Err(Error::InvalidArgument(format!(
                "{} step sizes for {} smoothing matrices",
                self.steps.len(),
                self.sigmas.len()
            )));
        }
        for v in [self.x0_dist, self.f0_gap, self.lambda_sq_bound] {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!("certificate input must be nonnegative, got {v}")));
            }
        }
        let d = self.sigmas[0].dim();
        let others = self.sigmas.iter().chain(self.sigma_zero.iter()).chain(self.sigma_next.iter());
        if let Some(s) = others.into_iter().find(|s| s.dim() != d) {
            return Err(Error::DimMismatch {
                expected: d,
                actual: s.dim(),
            });
        }
        Ok(())
    }

    fn step(&self, t: usize) -> f64 {
        if self.steps.len() == 1 {
            self.steps[0]
        } else {
            self.steps[t]
        }
    }

    fn horizon(&self) -> usize {
        self.sigmas.len()
    }
}

/// Bound on `f(x_T) − f(x_*)` for gradient descent on smoothed convex functions.
///
/// `(1/2T)‖x_0−x_*‖² + (1/T)[(Ld/4)Σ_t ‖Σ_t‖² + Σ_{t=1}^{T−1} t·B(Σ_{T−t}, Σ_{T−t+1})]`.
pub fn certificate_gd_convex(inputs: &CertificateInputs) -> Result<f64> {
    Ok(*certificate_gd_convex_prefix(inputs)?.last().expect("nonempty schedule"))
}

/// [`certificate_gd_convex`] for every horizon `1..=T`, in one pass.
///
/// With `B_j = B(Σ_j, Σ_{j+1})`, the switching sum at horizon `T` equals
/// `Σ_{j<T} (T−j)·B_j = T·ΣB_j − Σ j·B_j`, so two running sums suffice.
pub fn certificate_gd_convex_prefix(inputs: &CertificateInputs) -> Result<Vec<f64>> {
    inputs.validate()?;
    let l = inputs.l;
    let d = inputs.dim;
    let mut out = Vec::with_capacity(inputs.horizon());
    let mut sq_norms = 0.0;
    let mut b_sum = 0.0;
    let mut jb_sum = 0.0;
    for (i, s) in inputs.sigmas.iter().enumerate() {
        let horizon = (i + 1) as f64;
        if i > 0 {
            let b = bound_value_diff(l, d, &inputs.sigmas[i - 1], s)?;
            b_sum += b;
            jb_sum += i as f64 * b;
        }
        sq_norms += s.op_norm().powi(2);
        let switching = horizon * b_sum - jb_sum;
        let smoothing = l * d as f64 / 4.0 * sq_norms;
        out.push(inputs.x0_dist.powi(2) / (2.0 * horizon) + (smoothing + switching) / horizon);
    }
    Ok(out)
}

/// Bound on `min_t ‖∇f(x_t)‖²` for gradient descent with constant step `λ = steps[0]`.
pub fn certificate_gd_nonconvex(inputs: &CertificateInputs) -> Result<f64> {
    Ok(*certificate_gd_nonconvex_prefix(inputs)?.last().expect("nonempty schedule"))
}

/// [`certificate_gd_nonconvex`] for every horizon `1..=T`. At horizon `h < T`
/// the trailing switching term uses `Σ_{h+1}` from the sequence itself.
pub fn certificate_gd_nonconvex_prefix(inputs: &CertificateInputs) -> Result<Vec<f64>> {
    inputs.validate()?;
    let lambda = inputs.steps[0];
    if inputs.steps.iter().any(|&s| s != lambda) {
        return Err(Error::InvalidArgument("nonconvex certificate needs a constant step".into()));
    }
    let l = inputs.l;
    let d = inputs.dim as f64;
    let coef = l * l * ((6.0 + d) / 2.0).powi(3);
    let sigmas = &inputs.sigmas;
    let mut spectral = 0.0;
    let mut switching = bound_value_diff_opt(l, inputs.dim, &sigmas[0], inputs.sigma_zero.as_ref())?;
    let mut out = Vec::with_capacity(sigmas.len());
    for h in 1..=sigmas.len() {
        spectral += grad_factor(&sigmas[h - 1]).powi(2);
        let next = sigmas.get(h).or(inputs.sigma_next.as_ref());
        let trailing = match next {
            Some(n) => bound_value_diff(l, inputs.dim, n, &sigmas[h - 1])?,
            None => 0.0,
        };
        let hf = h as f64;
        let scale = 4.0 / (hf * lambda);
        out.push(scale * inputs.f0_gap + coef / hf * spectral + scale * (switching + trailing));
        switching += trailing;
    }
    Ok(out)
}

/// Bound on `min_t E‖∇f(x_t)‖²` for stochastic gradient descent with steps `η_t`.
pub fn certificate_sgd(inputs: &CertificateInputs) -> Result<f64> {
    Ok(*certificate_sgd_prefix(inputs)?.last().expect("nonempty schedule"))
}

/// [`certificate_sgd`] for every horizon `1..=T`, in one pass.
pub fn certificate_sgd_prefix(inputs: &CertificateInputs) -> Result<Vec<f64>> {
    inputs.validate()?;
    let l = inputs.l;
    let d = inputs.dim as f64;
    let noise = l * inputs.lambda_sq_bound;
    let smoothing_coef = l.powi(3) * (3.0 + d).powi(3) / 8.0;
    let mut eta_sum = 0.0;
    let mut eta_sq_sum = 0.0;
    let mut smoothing = 0.0;
    let mut switching = 0.0;
    let mut out = Vec::with_capacity(inputs.horizon());
    for (i, s) in inputs.sigmas.iter().enumerate() {
        let eta = inputs.step(i);
        eta_sum += eta;
        eta_sq_sum += eta * eta;
        smoothing += grad_factor(s).powi(2) * eta * eta;
        let prev = if i == 0 { inputs.sigma_zero.as_ref() } else { Some(&inputs.sigmas[i - 1]) };
        switching += bound_value_diff_opt(l, inputs.dim, s, prev)?;
        out.push((inputs.f0_gap + noise * eta_sq_sum + smoothing_coef * smoothing + switching) / eta_sum);
    }
    Ok(out)
}

/// Bound on `‖∇f_Σ − ∇f_T‖` written as `B̃(Σ, T)`; same as [`bound_grad_diff`].
pub fn bound_grad_switch(l: f64, d: usize, s: &SpdMatrix, t: &SpdMatrix) -> Result<f64> {
    bound_grad_diff(l, d, s, t)
}

/// Forgetting schedule `θ_t` of the second moment, as far as summability is concerned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSchedule {
    Constant(f64),
    /// `θ_t = 1 − c·t^{−q}`.
    PowerLaw { c: f64, q: f64 },
}

impl ThetaSchedule {
    /// `θ_t` for `t ≥ 1`.
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            ThetaSchedule::Constant(th) => th,
            ThetaSchedule::PowerLaw { c, q } => 1.0 - c * (t.max(1) as f64).powf(-q),
        }
    }
}

/// One checked hypothesis of the Adam convergence result.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub conditions: Vec<Condition>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Inputs for [`adam_assumption_check`] beyond the step exponent.
#[derive(Debug, Clone, Default)]
pub struct AdamCheckInputs<'a> {
    pub eta0: f64,
    pub theta: Option<ThetaSchedule>,
    /// `‖Σ_t‖` along a finite prefix of the schedule.
    pub sigma_norms: &'a [f64],
    /// `B̃(Σ_{t+1}, Σ_t)` along the same prefix (one shorter than `sigma_norms`).
    pub grad_switch: &'a [f64],
    /// Claimed constant `M̃` with `B̃_t ≤ M̃·η_t`; when absent the ratio must not grow.
    pub m_tilde: Option<f64>,
}

/// Checks the schedule hypotheses of the Adam result for `η_t = η_0 t^{−p}`.
pub fn adam_assumption_check(p: f64, inputs: &AdamCheckInputs<'_>) -> AssumptionReport {
    let mut conditions = vec![
        Condition {
            name: "sum_eta_diverges",
            passed: p <= 1.0,
            detail: format!("p = {p}; the p-series diverges iff p <= 1"),
        },
        Condition {
            name: "sum_eta_sq_converges",
            passed: 2.0 * p > 1.0,
            detail: format!("2p = {}; converges iff 2p > 1", 2.0 * p),
        },
    ];

    if let Some(theta) = inputs.theta {
        let (passed, detail) = match theta {
            ThetaSchedule::Constant(th) if th >= 1.0 => (true, "theta = 1, the sum is zero".to_string()),
            ThetaSchedule::Constant(th) => (p > 1.0, format!("constant theta = {th}; needs p > 1")),
            ThetaSchedule::PowerLaw { c, q } => (
                c == 0.0 || p + q > 1.0,
                format!("1 - theta_t = {c}·t^-{q}; needs p + q = {} > 1", p + q),
            ),
        };
        conditions.push(Condition {
            name: "sum_eta_one_minus_theta_converges",
            passed,
            detail,
        });
    }

    if !inputs.grad_switch.is_empty() {
        let eta = |t: usize| inputs.eta0 * ((t + 1) as f64).powf(-p);
        let ratios: Vec<f64> = inputs.grad_switch.iter().enumerate().map(|(t, b)| b / eta(t)).collect();
        let (passed, detail) = match inputs.m_tilde {
            Some(m) => {
                let worst = ratios.iter().cloned().fold(0.0, f64::max);
                (worst <= m, format!("max B/eta = {worst:.6e}, M = {m:.6e}"))
            }
            None => {
                let half = ratios.len().div_ceil(2);
                let head = ratios[..half].iter().cloned().fold(0.0, f64::max);
                let tail = ratios[half..].iter().cloned().fold(0.0, f64::max);
                (tail <= head, format!("max B/eta: first half {head:.6e}, second half {tail:.6e}"))
            }
        };
        conditions.push(Condition {
            name: "grad_switch_over_eta_bounded",
            passed,
            detail,
        });
    }

    if let (Some(first), Some(last)) = (inputs.sigma_norms.first(), inputs.sigma_norms.last()) {
        conditions.push(Condition {
            name: "sigma_vanishes",
            passed: *last < 0.01 * first,
            detail: format!("first {first:.6e}, last {last:.6e}"),
        });
    }

    AssumptionReport { conditions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn diag(v: &[f64]) -> SpdMatrix {
        SpdMatrix::from_diagonal(v).unwrap()
    }

    #[test]
    fn lemma3_examples() {
        let g = lemma3_gaps(2.0, 2, &SpdMatrix::identity(2));
        assert!((g.value_gap - 1.0).abs() < 1e-15);
        assert!((g.grad_gap - 2.0 * 2.5f64.powf(1.5)).abs() < 1e-12);
        assert!((g.grad_gap - 7.9057).abs() < 1e-4);

        let a = lemma3_gaps(1.0, 3, &SpdMatrix::isotropic(3, 1.0).unwrap()).grad_gap;
        let b = lemma3_gaps(1.0, 3, &SpdMatrix::isotropic(3, 2.0).unwrap()).grad_gap;
        assert!((b / a - 2.0).abs() < 1e-14);

        let z = lemma3_gaps(0.0, 4, &diag(&[1.0, 2.0, 3.0, 4.0]));
        assert_eq!((z.value_gap, z.grad_gap), (0.0, 0.0));
    }

    #[test]
    fn corollary_examples() {
        assert_eq!(corollary_grad_bound(0.0, 3, &SpdMatrix::identity(3), 0.0), 0.0);
        assert!((corollary_grad_bound(1.0, 1, &SpdMatrix::identity(1), 1.0) - 18.0).abs() < 1e-12);
        assert!((corollary_grad_bound(2.0, 2, &SpdMatrix::identity(2), 4.0) - 133.0).abs() < 1e-12);
    }

    #[test]
    fn value_diff_examples() {
        let s = diag(&[2.0, 1.0]);
        assert_eq!(bound_value_diff(2.0, 2, &s, &s).unwrap(), 0.0);

        let t = SpdMatrix::identity(2);
        assert!((value_diff_dominance(2.0, 2, &s, &t).unwrap() - 3.0).abs() < 1e-12);
        assert!((bound_value_diff(2.0, 2, &s, &t).unwrap() - 3.0).abs() < 1e-12);
        let stated = value_diff_codiagonal_squared(2.0, 2, &s, &t).unwrap().unwrap();
        assert!((stated - 9.0).abs() < 1e-12);

        let s = diag(&[1.0, 2.0]);
        let t = SpdMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert_eq!(value_diff_codiagonal(1.0, 2, &s, &t).unwrap(), None);
        assert!((bound_value_diff(1.0, 2, &s, &t).unwrap() - 5.5).abs() < 1e-12);
    }

    #[test]
    fn squared_codiagonal_form_underestimates_small_differences() {
        // d = 1, f(x) = x²/2 (L = 1): f_T − f_Σ = (T² − Σ²)/4 exactly.
        let s = SpdMatrix::identity(1);
        let t = diag(&[1.1]);
        let truth = (1.21 - 1.0) / 4.0;
        let stated = value_diff_codiagonal_squared(1.0, 1, &s, &t).unwrap().unwrap();
        assert!(stated < truth);
        assert!(bound_value_diff(1.0, 1, &s, &t).unwrap() >= truth - 1e-15);
    }

    #[test]
    fn value_diff_dimension_mismatch() {
        assert!(matches!(
            bound_value_diff(1.0, 2, &SpdMatrix::identity(2), &SpdMatrix::identity(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn grad_diff_examples() {
        assert_eq!(bound_grad_diff(0.0, 2, &diag(&[1.0, 3.0]), &diag(&[2.0, 1.0])).unwrap(), 0.0);
        let one = diag(&[1.0]);
        assert!((bound_grad_diff(1.0, 1, &one, &one).unwrap() - 5.6569).abs() < 1e-4);
        assert!((bound_grad_diff(1.0, 1, &diag(&[2.0]), &one).unwrap() - 8.4853).abs() < 1e-4);
    }

    #[test]
    fn convex_certificate_examples() {
        let mut c = CertificateInputs::new(2.0, 2, vec![0.25], vec![SpdMatrix::identity(2)]);
        c.x0_dist = 1.0;
        assert!((certificate_gd_convex(&c).unwrap() - 1.5).abs() < 1e-14);

        let mut c = CertificateInputs::new(2.0, 2, vec![0.25], vec![diag(&[2.0, 1.0]), SpdMatrix::identity(2)]);
        c.x0_dist = 0.0;
        assert!((certificate_gd_convex(&c).unwrap() - 4.0).abs() < 1e-12);

        let c = CertificateInputs::new(2.0, 2, vec![0.25], vec![SpdMatrix::identity(2); 5]);
        assert!((certificate_gd_convex(&c).unwrap() - 1.0).abs() < 1e-14);

        let c = CertificateInputs::new(1.0, 2, vec![0.25], vec![]);
        assert_eq!(certificate_gd_convex(&c), Err(Error::EmptySchedule));
    }

    #[test]
    fn convex_prefix_matches_direct_sum() {
        let sigmas: Vec<SpdMatrix> = (1..=12)
            .map(|t| diag(&[1.5 * 0.8f64.powi(t), 0.9f64.powi(t)]))
            .collect();
        let l = 1.3;
        let d = 2;
        let mut c = CertificateInputs::new(l, d, vec![0.1], sigmas.clone());
        c.x0_dist = 2.0;
        let prefix = certificate_gd_convex_prefix(&c).unwrap();
        for big_t in 1..=sigmas.len() {
            let tf = big_t as f64;
            let norms: f64 = sigmas[..big_t].iter().map(|s| s.op_norm().powi(2)).sum();
            let mut sw = 0.0;
            for t in 1..big_t {
                // Σ_{T−t} and Σ_{T−t+1}, 1-based.
                sw += t as f64 * bound_value_diff(l, d, &sigmas[big_t - t - 1], &sigmas[big_t - t]).unwrap();
            }
            let direct = 4.0 / (2.0 * tf) + (l * d as f64 / 4.0 * norms + sw) / tf;
            assert!((prefix[big_t - 1] - direct).abs() < 1e-12 * direct);
        }
    }

    #[test]
    fn nonconvex_certificate_examples() {
        let mut c = CertificateInputs::new(1.0, 2, vec![1.0], vec![SpdMatrix::identity(2)]);
        c.f0_gap = 1.0;
        assert!((certificate_gd_nonconvex(&c).unwrap() - 70.0).abs() < 1e-12);

        let mut c = CertificateInputs::new(0.0, 2, vec![0.5], vec![diag(&[1.0, 2.0]); 4]);
        c.f0_gap = 3.0;
        assert_eq!(certificate_gd_nonconvex(&c).unwrap(), 4.0 / (4.0 * 0.5) * 3.0);

        let c = CertificateInputs::new(1.0, 2, vec![0.0], vec![SpdMatrix::identity(2)]);
        assert_eq!(certificate_gd_nonconvex(&c), Err(Error::BadStep(0.0)));

        let mut c = CertificateInputs::new(1.0, 2, vec![0.5], vec![SpdMatrix::identity(2)]);
        c.f0_gap = 0.0;
        let v = certificate_gd_nonconvex(&c).unwrap();
        assert!((v - (64.0 + 8.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn nonconvex_prefix_matches_truncated_inputs() {
        let sigmas: Vec<SpdMatrix> = (1..=6).map(|t| diag(&[0.7f64.powi(t), 0.5])).collect();
        let mut c = CertificateInputs::new(1.5, 2, vec![0.3], sigmas.clone());
        c.f0_gap = 2.0;
        let prefix = certificate_gd_nonconvex_prefix(&c).unwrap();
        for h in 1..=sigmas.len() {
            let mut trunc = CertificateInputs::new(1.5, 2, vec![0.3], sigmas[..h].to_vec());
            trunc.f0_gap = 2.0;
            trunc.sigma_next = sigmas.get(h).cloned();
            let direct = certificate_gd_nonconvex(&trunc).unwrap();
            assert!((prefix[h - 1] - direct).abs() < 1e-12 * direct);
        }
    }

    #[test]
    fn nonconvex_certificate_decreases_with_horizon() {
        let mut prev = f64::INFINITY;
        for big_t in [1, 2, 5, 10, 50, 200] {
            let mut c = CertificateInputs::new(1.0, 2, vec![0.5], vec![SpdMatrix::isotropic(2, 0.1).unwrap(); big_t]);
            c.f0_gap = 5.0;
            let v = certificate_gd_nonconvex(&c).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn sgd_certificate_examples() {
        let s = diag(&[0.5, 0.7]);
        let mut c = CertificateInputs::new(1.0, 2, vec![0.1], vec![s.clone(); 10]);
        c.sigma_zero = Some(s.clone());
        c.f0_gap = 0.0;
        c.lambda_sq_bound = 0.0;
        let with_zero_switch = certificate_sgd(&c).unwrap();
        let d: f64 = 2.0;
        let third = (3.0 + d).powi(3) / 8.0 * grad_factor(&s).powi(2) * 0.1;
        assert!((with_zero_switch - third).abs() < 1e-12 * third);

        let mut c = CertificateInputs::new(0.0, 2, vec![0.1], vec![s.clone(); 10]);
        c.sigma_zero = Some(s.clone());
        assert_eq!(certificate_sgd(&c).unwrap(), 0.0);

        let c = CertificateInputs::new(1.0, 2, vec![0.1, -1.0], vec![s.clone(); 2]);
        assert_eq!(certificate_sgd(&c), Err(Error::BadStep(-1.0)));
    }

    #[test]
    fn sgd_certificate_plateau() {
        let s = SpdMatrix::isotropic(2, 0.05).unwrap();
        let (l, lam, eta): (f64, f64, f64) = (2.0, 3.0, 0.1);
        let mut c = CertificateInputs::new(l, 2, vec![eta], vec![s.clone(); 10_000]);
        c.sigma_zero = Some(s.clone());
        c.f0_gap = 1.0;
        c.lambda_sq_bound = lam;
        let v = certificate_sgd(&c).unwrap();
        let plateau = l * lam * eta + l.powi(3) * 125.0 / 8.0 * grad_factor(&s).powi(2) * eta;
        assert!((v - plateau).abs() < 0.01 * plateau, "{v} vs {plateau}");
    }

    #[test]
    fn adam_checks() {
        let base = AdamCheckInputs::default();
        let r = adam_assumption_check(0.6, &base);
        assert!(r.all_passed());
        assert!(!adam_assumption_check(1.5, &base).get("sum_eta_diverges").unwrap().passed);
        assert!(!adam_assumption_check(0.4, &base).get("sum_eta_sq_converges").unwrap().passed);

        let slow = AdamCheckInputs {
            theta: Some(ThetaSchedule::PowerLaw { c: 1e-3, q: 0.1 }),
            ..Default::default()
        };
        assert!(!adam_assumption_check(0.6, &slow).all_passed());
        let fast = AdamCheckInputs {
            theta: Some(ThetaSchedule::PowerLaw { c: 1e-3, q: 0.5 }),
            ..Default::default()
        };
        assert!(adam_assumption_check(0.6, &fast).all_passed());

        let norms: Vec<f64> = (0..200).map(|t| 0.95f64.powi(t)).collect();
        let switch: Vec<f64> = norms.windows(2).map(|w| w[0] + w[1]).collect();
        let inputs = AdamCheckInputs {
            eta0: 0.1,
            sigma_norms: &norms,
            grad_switch: &switch,
            ..Default::default()
        };
        assert!(adam_assumption_check(0.6, &inputs).all_passed());
        let flat = vec![1.0; 200];
        let inputs = AdamCheckInputs {
            sigma_norms: &flat,
            ..Default::default()
        };
        assert!(!adam_assumption_check(0.6, &inputs).get("sigma_vanishes").unwrap().passed);
    }
}

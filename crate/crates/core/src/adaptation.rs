//! Schedules for the smoothing matrix: fixed, geometric decay, or a rank-μ
//! covariance update driven by the perturbations already evaluated for the
//! gradient estimate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SpdMatrix, SymMatrix};
use crate::smoothing::EvaluatedSample;

/// Decay applied when the covariance update cannot rank any sample.
pub const FALLBACK_GAMMA: f64 = 0.95;
pub const DEFAULT_FLOOR: f64 = 1e-8;
pub const DEFAULT_CAP: f64 = 1e3;
pub const DEFAULT_C_MU: f64 = 0.3;
pub const DEFAULT_SCALE_DECAY: f64 = 0.99;

/// Constants of the rank-μ update.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    /// Number of elite samples.
    pub mu: usize,
    /// Learning rate in (0, 1].
    pub c_mu: f64,
    /// Positive, non-increasing, summing to one.
    pub weights: Vec<f64>,
    /// Global factor applied to Σ after each update.
    pub scale_decay: f64,
}

impl CmaParams {
    /// Log-rank weights `w_i ∝ ln(μ + 1/2) − ln i`.
    pub fn new(mu: usize, c_mu: f64, scale_decay: f64) -> Result<Self> {
        Self::with_weights(log_weights(mu), c_mu, scale_decay)
    }

    /// Defaults for `n` samples per step: `μ = ⌊n/2⌋`.
    pub fn for_samples(n: usize) -> Result<Self> {
        Self::new((n / 2).max(1), DEFAULT_C_MU, DEFAULT_SCALE_DECAY)
    }

    pub fn with_weights(weights: Vec<f64>, c_mu: f64, scale_decay: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("CMA needs mu >= 1".into()));
        }
        if !(c_mu > 0.0 && c_mu <= 1.0) {
            return Err(Error::InvalidArgument(format!("c_mu must lie in (0, 1], got {c_mu}")));
        }
        if !(scale_decay > 0.0 && scale_decay <= 1.0) {
            return Err(Error::InvalidArgument(format!("scale_decay must lie in (0, 1], got {scale_decay}")));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || weights.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::InvalidArgument("weights must be positive and non-increasing".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            mu: weights.len(),
            c_mu,
            weights,
            scale_decay,
        })
    }
}

pub fn log_weights(mu: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdaptationKind {
    Fixed,
    /// `Σ_{t+1} = γ·Σ_t` with `γ ∈ (0, 1)`.
    Geometric { gamma: f64 },
    Cma(CmaParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationStrategy {
    pub kind: AdaptationKind,
    pub sigma0: SpdMatrix,
    /// Smallest eigenvalue any emitted Σ may have.
    pub floor: f64,
    /// Largest eigenvalue any emitted Σ may have.
    pub cap: f64,
}

impl AdaptationStrategy {
    pub fn new(kind: AdaptationKind, sigma0: SpdMatrix) -> Self {
        Self {
            kind,
            sigma0,
            floor: DEFAULT_FLOOR,
            cap: DEFAULT_CAP,
        }
    }

    pub fn with_bounds(mut self, floor: f64, cap: f64) -> Self {
        self.floor = floor;
        self.cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_bounds(self.floor, self.cap)?;
        if let AdaptationKind::Geometric { gamma } = self.kind {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
            }
        }
        Ok(())
    }

    /// `Σ_0`, clamped into `[floor, cap]`.
    pub fn initial(&self) -> Result<SpdMatrix> {
        self.validate()?;
        clamp_spd(&self.sigma0, self.floor, self.cap)
    }

    pub fn needs_samples(&self) -> bool {
        matches!(self.kind, AdaptationKind::Cma(_))
    }
}

fn check_bounds(floor: f64, cap: f64) -> Result<()> {
    if !(floor > 0.0 && floor <= cap && cap.is_finite()) {
        return Err(Error::BadBounds { floor, cap });
    }
    Ok(())
}

/// Replaces eigenvalues outside `[floor, cap]` by the nearest bound.
pub fn clamp_spectrum(s: &SymMatrix, floor: f64, cap: f64) -> Result<SpdMatrix> {
    check_bounds(floor, cap)?;
    let (values, vectors) = sym_eigen(s)?;
    recompose_clamped(&values, &vectors, floor, cap)
}

/// [`clamp_spectrum`] for a matrix whose decomposition is already known.
/// Returns the input unchanged when nothing needs clamping.
pub fn clamp_spd(s: &SpdMatrix, floor: f64, cap: f64) -> Result<SpdMatrix> {
    check_bounds(floor, cap)?;
    if s.min_eig() >= floor && s.op_norm() <= cap {
        return Ok(s.clone());
    }
    recompose_clamped(s.eigenvalues(), s.eigenvectors(), floor, cap)
}

fn recompose_clamped(values: &DVector<f64>, vectors: &DMatrix<f64>, floor: f64, cap: f64) -> Result<SpdMatrix> {
    let clamped = values.map(|v| v.clamp(floor, cap));
    SpdMatrix::from_spectrum(clamped, vectors)
}

/// `(1 − c_μ)Σ² + c_μ Σ_i w_i y_i y_iᵀ` with `y_i = Σu_(i)`, ranking the samples
/// by ascending fitness and breaking ties by sample index.
pub fn cma_covariance(params: &CmaParams, s: &SpdMatrix, samples: &[EvaluatedSample]) -> Result<SymMatrix> {
    let mut ranked: Vec<(usize, &EvaluatedSample)> =
        samples.iter().enumerate().filter(|(_, e)| e.value.is_finite()).collect();
    if ranked.is_empty() {
        return Err(Error::AdaptationFailed("no sample has a finite value".into()));
    }
    if ranked.len() < params.mu {
        return Err(Error::AdaptationFailed(format!(
            "{} finite samples for mu = {}",
            ranked.len(),
            params.mu
        )));
    }
    if let Some((_, e)) = ranked.iter().find(|(_, e)| e.u.len() != s.dim()) {
        return Err(Error::DimMismatch {
            expected: s.dim(),
            actual: e.u.len(),
        });
    }
    ranked.sort_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)));

    let d = s.dim();
    let mut rank_mu = DMatrix::zeros(d, d);
    for (w, (_, e)) in params.weights.iter().zip(&ranked) {
        let y = s.mul_vec(&e.u);
        rank_mu.ger(*w, &y, &y, 1.0);
    }
    let c = s.square().matrix() * (1.0 - params.c_mu) + rank_mu * params.c_mu;
    SymMatrix::new(c)
}

/// `Σ_{t+1}` from `Σ_t` and the samples evaluated around the current iterate.
///
/// The covariance update with no samples at all only applies the scale decay.
pub fn adapt(strategy: &AdaptationStrategy, s: &SpdMatrix, samples: &[EvaluatedSample]) -> Result<SpdMatrix> {
    strategy.validate()?;
    let (floor, cap) = (strategy.floor, strategy.cap);
    match &strategy.kind {
        AdaptationKind::Fixed => Ok(s.clone()),
        AdaptationKind::Geometric { gamma } => clamp_spd(&s.scaled(*gamma)?, floor, cap),
        AdaptationKind::Cma(params) => {
            if samples.is_empty() {
                return clamp_spd(&s.scaled(params.scale_decay)?, floor, cap);
            }
            let c = cma_covariance(params, s, samples)?;
            // C may be singular when c_μ = 1 and μ < d; clip before the root.
            let (values, vectors) = sym_eigen(&c)?;
            let roots = values.map(|v| v.max(0.0).sqrt() * params.scale_decay);
            recompose_clamped(&roots, &vectors, floor, cap)
        }
    }
}

/// [`adapt`], falling back to geometric decay with [`FALLBACK_GAMMA`] when the
/// update fails. The error, if any, is returned for the record.
pub fn adapt_or_fallback(
    strategy: &AdaptationStrategy,
    s: &SpdMatrix,
    samples: &[EvaluatedSample],
) -> Result<(SpdMatrix, Option<Error>)> {
    match adapt(strategy, s, samples) {
        Ok(next) => Ok((next, None)),
        Err(e @ Error::AdaptationFailed(_)) => {
            let next = clamp_spd(&s.scaled(FALLBACK_GAMMA)?, strategy.floor, strategy.cap)?;
            Ok((next, Some(e)))
        }
        Err(e) => Err(e),
    }
}

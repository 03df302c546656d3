//! Dense symmetric and symmetric positive definite matrices.
//!
//! Every smoothing matrix in the crate is an [`SpdMatrix`], which caches its
//! eigendecomposition so that square roots, inverses and norms are cheap and
//! consistent with each other.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the operator norm reject SPD construction.
pub const EIG_FLOOR_REL: f64 = 1e-12;
/// Relative tolerance on the commutator when testing for a shared eigenbasis.
pub const COMMUTE_TOL: f64 = 1e-10;
/// Relative tolerance when testing a difference of squares for semi-definiteness.
pub const PSD_TOL: f64 = 1e-10;

/// A real symmetric matrix. Construction symmetrizes the input as `(M + Mᵀ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    entries: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be >= 1".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix);
        }
        let t = m.transpose();
        let mut entries = (m + t) * 0.5;
        // (a+b)/2 and (b+a)/2 agree bitwise, but copy the upper triangle to be explicit.
        let d = entries.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                entries[(j, i)] = entries[(i, j)];
            }
        }
        Ok(Self { entries })
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.entries * v
    }

    /// `self · self`, which is symmetric for symmetric input.
    pub fn square(&self) -> SymMatrix {
        Self::new(&self.entries * &self.entries).expect("square of a finite symmetric matrix")
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_dims(self.dim(), other.dim())?;
        Self::new(&self.entries + &other.entries)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_dims(self.dim(), other.dim())?;
        Self::new(&self.entries - &other.entries)
    }

    pub fn scale(&self, s: f64) -> Result<SymMatrix> {
        Self::new(&self.entries * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Symmetric positive definite matrix with a cached eigendecomposition.
///
/// Eigenvalues are stored in descending order; eigenvector columns are
/// orthonormal and sign-normalized so that their largest-magnitude entry is
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    base: SymMatrix,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(base: SymMatrix) -> Result<Self> {
        let (eigenvalues, eigenvectors) = sym_eigen(&base)?;
        check_floor(&eigenvalues)?;
        Ok(Self {
            base,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self::isotropic(dim, 1.0).expect("identity is SPD")
    }

    /// `sigma · I`.
    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eig: sigma,
                floor: 0.0,
            });
        }
        Ok(Self {
            base: SymMatrix {
                entries: DMatrix::identity(dim, dim) * sigma,
            },
            eigenvalues: DVector::from_element(dim, sigma),
            eigenvectors: DMatrix::identity(dim, dim),
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::from_diagonal(diag)?)
    }

    /// Builds `P · diag(values) · Pᵀ` from an orthonormal `P`.
    pub fn from_spectrum(values: DVector<f64>, vectors: &DMatrix<f64>) -> Result<Self> {
        check_dims(values.len(), vectors.ncols())?;
        let m = vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
        Self::new(SymMatrix::new(m)?)
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.base.matrix()
    }

    /// Descending eigenvalues.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Operator norm ‖Σ‖, the largest eigenvalue.
    pub fn op_norm(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eig(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// ‖Σ⁻¹‖ = 1 / λ_min.
    pub fn inv_norm(&self) -> f64 {
        1.0 / self.min_eig()
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        self.base.mul_vec(v)
    }

    /// Σ⁻¹ as a dense matrix, assembled from the eigendecomposition.
    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self.eigenvalues.map(|l| 1.0 / l);
        let p = &self.eigenvectors;
        let m = p * DMatrix::from_diagonal(&inv) * p.transpose();
        (&m + m.transpose()) * 0.5
    }

    pub fn square(&self) -> SymMatrix {
        self.base.square()
    }

    /// `s · Σ` for `s > 0`, reusing the cached eigenvectors.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {s}")));
        }
        Ok(Self {
            base: self.base.scale(s)?,
            eigenvalues: &self.eigenvalues * s,
            eigenvectors: self.eigenvectors.clone(),
        })
    }
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimMismatch { expected, actual });
    }
    Ok(())
}

fn check_floor(eigenvalues: &DVector<f64>) -> Result<()> {
    let max = eigenvalues[0];
    let min = eigenvalues[eigenvalues.len() - 1];
    let floor = EIG_FLOOR_REL * max.abs();
    if !(max > 0.0) || min < floor || min <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: min, floor });
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted descending.
pub fn sym_eigen(m: &SymMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if m.matrix().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix);
    }
    let d = m.dim();
    let eig = SymmetricEigen::new(m.matrix().clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let values = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        let lead = v.iter().copied().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v = -v;
        }
        vectors.set_column(col, &v);
    }
    Ok((values, vectors))
}

/// Principal square root of an SPD matrix.
pub fn spd_sqrt(m: &SpdMatrix) -> Result<SpdMatrix> {
    check_floor(m.eigenvalues())?;
    sqrt_from_parts(m.eigenvalues(), m.eigenvectors())
}

/// Principal square root of a symmetric matrix that must be positive definite.
pub fn sym_sqrt(m: &SymMatrix) -> Result<SpdMatrix> {
    let (values, vectors) = sym_eigen(m)?;
    check_floor(&values)?;
    sqrt_from_parts(&values, &vectors)
}

fn sqrt_from_parts(values: &DVector<f64>, vectors: &DMatrix<f64>) -> Result<SpdMatrix> {
    let roots = values.map(f64::sqrt);
    let m = vectors * DMatrix::from_diagonal(&roots) * vectors.transpose();
    let base = SymMatrix::new(m)?;
    // The roots are already descending and the eigenvectors are shared.
    check_floor(&roots)?;
    Ok(SpdMatrix {
        base,
        eigenvalues: roots,
        eigenvectors: vectors.clone(),
    })
}

/// max |λ_i| over the spectrum.
pub fn operator_norm(m: &SymMatrix) -> Result<f64> {
    let (values, _) = sym_eigen(m)?;
    Ok(values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    let (values, _) = sym_eigen(m)?;
    Ok(values[values.len() - 1])
}

/// Structural relationship between two smoothing matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairClass {
    /// Σ and T share an eigenbasis (they commute).
    pub codiagonalizable: bool,
    /// T² − Σ² is positive semi-definite.
    pub t_dominates: bool,
    /// Σ² − T² is positive semi-definite.
    pub s_dominates: bool,
}

pub fn classify_pair(s: &SpdMatrix, t: &SpdMatrix) -> Result<PairClass> {
    check_dims(s.dim(), t.dim())?;
    let (sm, tm) = (s.matrix(), t.matrix());
    let commutator = sm * tm - tm * sm;
    let scale = s.op_norm().max(t.op_norm());
    let comm_max = commutator.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let codiagonalizable = comm_max < COMMUTE_TOL * scale * scale;

    let s2 = s.square();
    let t2 = t.square();
    let psd_tol = PSD_TOL * s.op_norm().powi(2).max(t.op_norm().powi(2));
    let diff = t2.sub(&s2)?;
    let (values, _) = sym_eigen(&diff)?;
    let t_dominates = values[values.len() - 1] >= -psd_tol;
    let s_dominates = -values[0] >= -psd_tol;
    Ok(PairClass {
        codiagonalizable,
        t_dominates,
        s_dominates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    fn reconstruct(values: &DVector<f64>, vectors: &DMatrix<f64>) -> DMatrix<f64> {
        vectors * DMatrix::from_diagonal(values) * vectors.transpose()
    }

    #[test]
    fn symmetrizes_on_construction() {
        let m = SymMatrix::from_row_slice(2, &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.matrix()[(0, 1)], 3.0);
        assert_eq!(m.matrix()[(1, 0)], 3.0);
    }

    #[test]
    fn rejects_non_finite_entries() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert_eq!(SymMatrix::new(m), Err(Error::InvalidMatrix));
    }

    #[test]
    fn eigen_of_diagonal() {
        let m = SymMatrix::from_diagonal(&[5.0, 2.0]).unwrap();
        let (values, vectors) = sym_eigen(&m).unwrap();
        assert_eq!(values.as_slice(), &[5.0, 2.0]);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((vectors[(i, j)].abs() - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eigen_of_swap_matrix() {
        let m = SymMatrix::from_row_slice(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let (values, vectors) = sym_eigen(&m).unwrap();
        assert!((values[0] - 1.0).abs() < 1e-14);
        assert!((values[1] + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((vectors[(0, 0)].abs() - h).abs() < 1e-14);
        assert!((vectors[(1, 0)] - vectors[(0, 0)]).abs() < 1e-14);
        assert!((vectors[(1, 1)] + vectors[(0, 1)]).abs() < 1e-14);
    }

    #[test]
    fn eigen_matches_closed_form_2x2() {
        // Roots of λ² − tr·λ + det for [[2,1],[1,2]].
        let (tr, det) = (4.0_f64, 3.0_f64);
        let disc = (tr * tr / 4.0 - det).sqrt();
        let m = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let (values, vectors) = sym_eigen(&m).unwrap();
        assert!((values[0] - (tr / 2.0 + disc)).abs() < 1e-14);
        assert!((values[1] - (tr / 2.0 - disc)).abs() < 1e-14);
        assert!(rel_frobenius(&reconstruct(&values, &vectors), m.matrix()) < 1e-10);
    }

    #[test]
    fn sqrt_examples() {
        let m = SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap();
        let r = spd_sqrt(&m).unwrap();
        assert!((r.matrix()[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((r.matrix()[(1, 1)] - 3.0).abs() < 1e-14);
        assert!(r.matrix()[(0, 1)].abs() < 1e-14);

        let id = spd_sqrt(&SpdMatrix::identity(3)).unwrap();
        assert!(rel_frobenius(id.matrix(), &DMatrix::identity(3, 3)) < 1e-15);

        let m = SpdMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let r = spd_sqrt(&m).unwrap();
        let sq = r.matrix() * r.matrix();
        assert!(rel_frobenius(&sq, m.matrix()) < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m = SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(sym_sqrt(&m), Err(Error::NotPositiveDefinite { .. })));
        assert!(matches!(SpdMatrix::new(m), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn spd_rejects_eigenvalues_below_relative_floor() {
        let m = SymMatrix::from_diagonal(&[1.0, 1e-13]).unwrap();
        assert!(SpdMatrix::new(m).is_err());
        let m = SymMatrix::from_diagonal(&[1.0, 1e-11]).unwrap();
        assert!(SpdMatrix::new(m).is_ok());
    }

    fn power_iteration(m: &DMatrix<f64>) -> f64 {
        let mut v = DVector::from_fn(m.nrows(), |i, _| 1.0 + 0.1 * i as f64);
        let mut lambda = 0.0;
        for _ in 0..500 {
            let w = m * &v;
            lambda = w.norm() / v.norm();
            v = w.normalize();
        }
        lambda
    }

    #[test]
    fn operator_norm_examples() {
        let m = SymMatrix::from_diagonal(&[2.0, 5.0]).unwrap();
        assert_eq!(operator_norm(&m).unwrap(), 5.0);
        for d in 1..6 {
            assert!((operator_norm(&SymMatrix::identity(d)).unwrap() - 1.0).abs() < 1e-15);
        }
        let m = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let n = operator_norm(&m).unwrap();
        assert!((n - 3.0).abs() < 1e-14);
        assert!((n - power_iteration(m.matrix())).abs() < 1e-10);
    }

    #[test]
    fn classify_examples() {
        let s = SpdMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let t = SpdMatrix::from_diagonal(&[2.0, 1.0]).unwrap();
        assert_eq!(
            classify_pair(&s, &t).unwrap(),
            PairClass {
                codiagonalizable: true,
                t_dominates: false,
                s_dominates: false
            }
        );

        let s = SpdMatrix::identity(2);
        let t = SpdMatrix::isotropic(2, 2.0).unwrap();
        assert_eq!(
            classify_pair(&s, &t).unwrap(),
            PairClass {
                codiagonalizable: true,
                t_dominates: true,
                s_dominates: false
            }
        );

        let s = SpdMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let t = SpdMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        // T² − Σ² = [[4,4],[4,1]], determinant −12.
        let diff = t.square().sub(&s.square()).unwrap();
        assert_eq!(diff.matrix(), &DMatrix::from_row_slice(2, 2, &[4.0, 4.0, 4.0, 1.0]));
        assert_eq!(
            classify_pair(&s, &t).unwrap(),
            PairClass {
                codiagonalizable: false,
                t_dominates: false,
                s_dominates: false
            }
        );
    }

    #[test]
    fn classify_dimension_mismatch() {
        let s = SpdMatrix::identity(2);
        let t = SpdMatrix::identity(3);
        assert_eq!(
            classify_pair(&s, &t),
            Err(Error::DimMismatch {
                expected: 2,
                actual: 3
            })
        );
    }

    #[test]
    fn scaled_keeps_spectrum_consistent() {
        let m = SpdMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let s = m.scaled(0.5).unwrap();
        assert!((s.op_norm() - 1.5).abs() < 1e-15);
        let (values, _) = sym_eigen(s.sym()).unwrap();
        assert!((values[1] - s.min_eig()).abs() < 1e-14);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = SpdMatrix::from_matrix(DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]))
            .unwrap();
        let prod = m.inverse() * m.matrix();
        assert!((prod - DMatrix::identity(3, 3)).amax() < 1e-13);
    }
}

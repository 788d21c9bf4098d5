//! Dense symmetric matrix primitives.
//!
//! Every determinant in this crate goes through [`Cholesky::log_det`], which
//! sums log pivots and never forms the determinant itself.

use nalgebra::{DMatrix, DVector};

use crate::error::{dims, Error, Result};
use crate::information::JointGaussian;

/// Largest tolerated `|m_ij - m_ji|`, relative to `max(1, max|m_ij|)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// A pivot at or below this value fails the positive-definite factorization.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// Smallest pivot accepted by the semidefinite factorization.
pub const PSD_PIVOT_FLOOR: f64 = -1e-12;

/// Square symmetric matrix. Stored entries are exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Checks symmetry within [`SYMMETRY_TOLERANCE`], then symmetrizes.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                what: "symmetric matrix",
                expected: "square, dim >= 1".into(),
                actual: dims(m.nrows(), m.ncols()),
            });
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if !(asym <= SYMMETRY_TOLERANCE * scale) {
            return Err(Error::NotSymmetric {
                what: "matrix",
                asymmetry: asym,
            });
        }
        Ok(Self::symmetrize(m))
    }

    /// `(M + Mᵀ)/2` without a tolerance check, for computed covariances.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scale(&self, c: f64) -> Self {
        SymMatrix(&self.0 * c)
    }

    /// `A M Aᵀ`, symmetrized.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Self {
        Self::symmetrize(a * &self.0 * a.transpose())
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::factor(self)
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Builds a dense matrix from row slices, checking that rows are ragged-free.
pub fn matrix_from_rows(rows: &[&[f64]]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            what: "matrix rows",
            expected: format!("{c} columns in every row"),
            actual: "ragged rows".into(),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Lower-triangular factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Fails with `NotPositiveDefinite` on any pivot `<= PIVOT_FLOOR` or
    /// non-finite value.
    pub fn factor(m: &SymMatrix) -> Result<Self> {
        let a = m.as_matrix();
        let n = a.nrows();
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > PIVOT_FLOOR) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { what: "matrix" });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `ln det M = 2 Σ ln L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `M X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self
            .l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal");
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self
            .l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal");
        self.l
            .tr_solve_lower_triangular(&y)
            .expect("cholesky factor has a positive diagonal")
    }

    /// Solves `L X = B` (whitening).
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.dim();
        SymMatrix::symmetrize(self.solve(&DMatrix::identity(n, n)))
    }

    /// `xᵀ M⁻¹ x`.
    pub fn quad_inv(&self, x: &DVector<f64>) -> f64 {
        let y = self
            .l
            .solve_lower_triangular(x)
            .expect("cholesky factor has a positive diagonal");
        y.norm_squared()
    }
}

/// True iff the Cholesky factorization succeeds with every pivot positive.
pub fn is_spd(m: &SymMatrix) -> bool {
    Cholesky::factor(m).is_ok()
}

/// `ln det M` via the Cholesky pivots.
pub fn log_det_spd(m: &SymMatrix) -> Result<f64> {
    Ok(Cholesky::factor(m)?.log_det())
}

/// Lower factor `L` with `M = L Lᵀ` for a positive *semi*definite `M`.
///
/// Pivots in `[PSD_PIVOT_FLOOR, tol]` are treated as zero and their column is
/// dropped; the residual of that column must then vanish.
pub fn psd_factor(m: &SymMatrix) -> Result<DMatrix<f64>> {
    let a = m.as_matrix();
    let n = a.nrows();
    let scale = a.amax().max(1.0);
    let zero_tol = 1e-12 * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() || d < PSD_PIVOT_FLOOR {
            return Err(Error::NotPositiveDefinite {
                what: "covariance (semidefinite factor)",
            });
        }
        if d <= zero_tol {
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > 1e-9 * scale {
                    return Err(Error::NotPositiveDefinite {
                        what: "covariance (semidefinite factor)",
                    });
                }
            }
            continue;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// True iff [`psd_factor`] succeeds.
pub fn is_psd(m: &SymMatrix) -> bool {
    psd_factor(m).is_ok()
}

/// Log-determinants of a joint covariance computed three ways:
/// the assembled block matrix, `Σxx` times its Schur complement, and `Σyy`
/// times its Schur complement.
pub fn schur_det_check(j: &JointGaussian) -> Result<(f64, f64, f64)> {
    let full = j.assembled();
    let lhs = log_det_spd(&full)?;

    let sxx = j.sxx().cholesky()?;
    let syy = j.syy().cholesky()?;
    let sxy = j.sxy();
    let syx = sxy.transpose();

    // Σyy − Σyx Σxx⁻¹ Σxy
    let schur_y = SymMatrix::symmetrize(j.syy().as_matrix() - &syx * sxx.solve(sxy));
    // Σxx − Σxy Σyy⁻¹ Σyx
    let schur_x = SymMatrix::symmetrize(j.sxx().as_matrix() - sxy * syy.solve(&syx));

    let rhs1 = sxx.log_det() + log_det_spd(&schur_y)?;
    let rhs2 = syy.log_det() + log_det_spd(&schur_x)?;
    Ok((lhs, rhs1, rhs2))
}

/// Frobenius norm of `a - b` relative to `max(‖b‖_F, floor)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

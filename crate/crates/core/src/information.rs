//! Information functionals of Gaussian vectors, in nats.
//!
//! Shannon and Rényi entropies have closed forms in `ln det Σ`; mutual
//! information of a jointly Gaussian pair is a log-determinant ratio and is
//! the same for every Rényi order.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linops::{is_spd, log_det_spd, SymMatrix};
use crate::model::shape_error;

/// Jointly Gaussian pair `(X, Y)` with block covariance `[[Σxx, Σxy], [Σyx, Σyy]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaussian {
    mean_x: DVector<f64>,
    mean_y: DVector<f64>,
    sxx: SymMatrix,
    syy: SymMatrix,
    sxy: DMatrix<f64>,
}

impl JointGaussian {
    /// Fails unless the assembled block covariance is SPD.
    pub fn new(
        mean_x: Vec<f64>,
        mean_y: Vec<f64>,
        sxx: SymMatrix,
        syy: SymMatrix,
        sxy: DMatrix<f64>,
    ) -> Result<Self> {
        let (nx, ny) = (sxx.dim(), syy.dim());
        if mean_x.len() != nx || mean_y.len() != ny {
            return Err(shape_error(
                "joint means",
                (nx, ny),
                (mean_x.len(), mean_y.len()),
            ));
        }
        if sxy.shape() != (nx, ny) {
            return Err(shape_error("cross covariance", (nx, ny), sxy.shape()));
        }
        let j = JointGaussian {
            mean_x: DVector::from_vec(mean_x),
            mean_y: DVector::from_vec(mean_y),
            sxx,
            syy,
            sxy,
        };
        if !is_spd(&j.assembled()) {
            return Err(Error::NotPositiveDefinite {
                what: "joint covariance",
            });
        }
        Ok(j)
    }

    /// Splits an SPD `(N+M)×(N+M)` covariance after its first `nx` coordinates.
    pub fn from_full(cov: &SymMatrix, nx: usize) -> Result<Self> {
        let d = cov.dim();
        if nx == 0 || nx >= d {
            return Err(shape_error("joint split", (1, d - 1), (nx, d)));
        }
        let ny = d - nx;
        let m = cov.as_matrix();
        JointGaussian::new(
            vec![0.0; nx],
            vec![0.0; ny],
            SymMatrix::symmetrize(m.view((0, 0), (nx, nx)).into_owned()),
            SymMatrix::symmetrize(m.view((nx, nx), (ny, ny)).into_owned()),
            m.view((0, nx), (nx, ny)).into_owned(),
        )
    }

    pub fn mean_x(&self) -> &DVector<f64> {
        &self.mean_x
    }

    pub fn mean_y(&self) -> &DVector<f64> {
        &self.mean_y
    }

    pub fn sxx(&self) -> &SymMatrix {
        &self.sxx
    }

    pub fn syy(&self) -> &SymMatrix {
        &self.syy
    }

    pub fn sxy(&self) -> &DMatrix<f64> {
        &self.sxy
    }

    pub fn nx(&self) -> usize {
        self.sxx.dim()
    }

    pub fn ny(&self) -> usize {
        self.syy.dim()
    }

    /// The full block covariance.
    pub fn assembled(&self) -> SymMatrix {
        let (nx, ny) = (self.nx(), self.ny());
        let mut full = DMatrix::zeros(nx + ny, nx + ny);
        full.view_mut((0, 0), (nx, nx))
            .copy_from(self.sxx.as_matrix());
        full.view_mut((nx, nx), (ny, ny))
            .copy_from(self.syy.as_matrix());
        full.view_mut((0, nx), (nx, ny)).copy_from(&self.sxy);
        full.view_mut((nx, 0), (ny, nx))
            .copy_from(&self.sxy.transpose());
        SymMatrix::symmetrize(full)
    }
}

/// Order `α` of a Rényi entropy: `α > 0`, `|α − 1| > 1e-9`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && (alpha - 1.0).abs() > 1e-9 {
            Ok(RenyiOrder(alpha))
        } else {
            Err(Error::InvalidOrder(alpha))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// `½ (N ln 2πe + ln det Σ)`
pub fn entropy_gaussian(cov: &SymMatrix) -> Result<f64> {
    let n = cov.dim() as f64;
    Ok(0.5 * (n * (2.0 * PI).ln() + n + log_det_spd(cov)?))
}

/// `½ (N ln 2π + (N/(α−1)) ln α + ln det Σ)`
pub fn renyi_entropy(cov: &SymMatrix, order: RenyiOrder) -> Result<f64> {
    let n = cov.dim() as f64;
    let a = order.alpha();
    Ok(0.5 * (n * (2.0 * PI).ln() + n / (a - 1.0) * a.ln() + log_det_spd(cov)?))
}

/// `½ (ln det Σxx + ln det Σyy − ln det Σ)`
pub fn mutual_information_joint(j: &JointGaussian) -> Result<f64> {
    let lx = log_det_spd(j.sxx())?;
    let ly = log_det_spd(j.syy())?;
    let lxy = log_det_spd(&j.assembled())?;
    Ok(0.5 * (lx + ly - lxy))
}

/// Information a measurement update removed from the state:
/// `½ (ln det Σ_prior − ln det Σ_post)`.
pub fn update_mi(prior_cov: &SymMatrix, posterior_cov: &SymMatrix) -> Result<f64> {
    if prior_cov.dim() != posterior_cov.dim() {
        return Err(Error::DimensionMismatch {
            what: "prior vs posterior covariance",
            expected: prior_cov.dim().to_string(),
            actual: posterior_cov.dim().to_string(),
        });
    }
    Ok(0.5 * (log_det_spd(prior_cov)? - log_det_spd(posterior_cov)?))
}

/// `H_α(X) + H_α(Y) − H_α(X, Y)`, from three separate Rényi entropies.
pub fn renyi_mutual_information(j: &JointGaussian, order: RenyiOrder) -> Result<f64> {
    Ok(
        renyi_entropy(j.sxx(), order)? + renyi_entropy(j.syy(), order)?
            - renyi_entropy(&j.assembled(), order)?,
    )
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

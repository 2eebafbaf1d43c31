//! Mirror–mirror logarithmic negativity from the reduced 4×4 covariance.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use serde::Serialize;

use crate::dynamics::layout::MECH_START;
use crate::error::{Error, Result};
use crate::steady_state::CovarianceMatrix;
use crate::symplectic::symplectic_eigenvalues;

/// Tolerance (relative to max(1, Ψ²)) for clamping small negative radicands.
pub const RADICAND_TOLERANCE: f64 = 1e-12;

/// σ = [[X, Z], [Zᵀ, Y]] for the two mechanical modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCovariance {
    pub sigma: Matrix4<f64>,
}

impl ReducedCovariance {
    pub fn new(sigma: Matrix4<f64>) -> Self {
        Self { sigma }
    }

    pub fn x(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn y(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn z(&self) -> Matrix2<f64> {
        self.sigma.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// σ with P₂ → −P₂.
    pub fn partial_transpose(&self) -> Matrix4<f64> {
        let flip = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
        flip * self.sigma * flip
    }

    /// ϱ⁻ computed as the smallest symplectic eigenvalue of the partially
    /// transposed σ, from the spectrum of iΣσ̃.
    pub fn pt_symplectic_minimum(&self) -> Result<f64> {
        let pt = self.partial_transpose();
        let spectrum = symplectic_eigenvalues(&DMatrix::from_iterator(4, 4, pt.iter().copied()))?;
        Ok(spectrum[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementResult {
    /// Ψ = det X + det Y − 2 det Z
    pub psi: f64,
    /// ϱ⁻
    pub nu_minus: f64,
    /// E_N = max(0, −ln 2ϱ⁻)
    pub log_negativity: f64,
    pub separable: bool,
    pub det_z: f64,
}

/// Extracts the mechanical 4×4 block of η.
pub fn reduce_covariance(eta: &CovarianceMatrix) -> ReducedCovariance {
    ReducedCovariance::new(
        eta.0
            .fixed_view::<4, 4>(MECH_START, MECH_START)
            .into_owned(),
    )
}

/// Logarithmic negativity between the two mirrors.
pub fn log_negativity(sigma: &ReducedCovariance) -> Result<EntanglementResult> {
    let det_z = sigma.z().determinant();
    let psi = sigma.x().determinant() + sigma.y().determinant() - 2.0 * det_z;
    let det = sigma.sigma.determinant();

    let tolerance = RADICAND_TOLERANCE * psi.powi(2).max(1.0);
    let mut disc = psi * psi - 4.0 * det;
    if disc < 0.0 {
        if disc < -tolerance {
            return Err(Error::UnphysicalCovariance(format!(
                "Psi^2 - 4 det(sigma) = {disc:e} < 0"
            )));
        }
        disc = 0.0;
    }
    let mut radicand = 0.5 * (psi - disc.sqrt());
    if radicand < 0.0 {
        if radicand < -tolerance {
            return Err(Error::UnphysicalCovariance(format!(
                "negative radicand {radicand:e} for nu_minus"
            )));
        }
        radicand = 0.0;
    }
    let nu_minus = radicand.sqrt();
    let log_negativity = if nu_minus >= 0.5 {
        0.0
    } else {
        -(2.0 * nu_minus).ln()
    };
    Ok(EntanglementResult {
        psi,
        nu_minus,
        log_negativity,
        separable: nu_minus >= 0.5,
        det_z,
    })
}

//! Drift matrix, stationary noise matrix and the stability test of the
//! linearized quadrature dynamics Ż = QZ + Y.

use nalgebra::{Complex, SMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{DerivedQuantities, PhysicalParams};

/// Number of quadratures (two mechanical and two optical modes).
pub const DIM: usize = 8;

pub type Matrix8 = SMatrix<f64, DIM, DIM>;

/// Quadrature ordering shared by every matrix in the crate.
pub mod layout {
    pub const Q_A1: usize = 0;
    pub const P_A1: usize = 1;
    pub const Q_A2: usize = 2;
    pub const P_A2: usize = 3;
    pub const Q_C1: usize = 4;
    pub const P_C1: usize = 5;
    pub const Q_C2: usize = 6;
    pub const P_C2: usize = 7;

    /// First index of the mechanical block; it spans `MECH_START..MECH_START + 4`.
    pub const MECH_START: usize = Q_A1;

    pub const LABELS: [&str; super::DIM] = [
        "Q_a1", "P_a1", "Q_a2", "P_a2", "Q_c1", "P_c1", "Q_c2", "P_c2",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub Matrix8);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMatrix(pub Matrix8);

impl DriftMatrix {
    pub fn matrix(&self) -> &Matrix8 {
        &self.0
    }
}

impl NoiseMatrix {
    pub fn matrix(&self) -> &Matrix8 {
        &self.0
    }
}

/// Builds Q in the ordering (Q_a1, P_a1, Q_a2, P_a2, Q_c1, P_c1, Q_c2, P_c2).
pub fn build_drift(d: &DerivedQuantities, p: &PhysicalParams) -> DriftMatrix {
    use layout::*;

    let mech = -p.mechanical_damping / 2.0;
    let cav = -p.cavity_damping / 2.0;
    let j = d.coupling;
    let beta = p.tunneling;
    let alpha = p.hopping;
    let pa_cos = 2.0 * p.pa_gain * p.pa_phase.cos();
    let pa_sin = 2.0 * p.pa_gain * p.pa_phase.sin();

    let mut q = Matrix8::zeros();
    for k in [Q_A1, P_A1, Q_A2, P_A2] {
        q[(k, k)] = mech;
    }

    // Phonon tunneling couples Q_aj to P_an and P_aj to Q_an.
    q[(Q_A1, P_A2)] = -beta;
    q[(P_A1, Q_A2)] = beta;
    q[(Q_A2, P_A1)] = -beta;
    q[(P_A2, Q_A1)] = beta;

    // Beam-splitter exchange between each mirror and its cavity.
    for (a, c) in [(Q_A1, Q_C1), (P_A1, P_C1), (Q_A2, Q_C2), (P_A2, P_C2)] {
        q[(a, c)] = j;
        q[(c, a)] = -j;
    }

    for (qc, pc) in [(Q_C1, P_C1), (Q_C2, P_C2)] {
        q[(qc, qc)] = cav + pa_cos;
        q[(pc, pc)] = cav - pa_cos;
        q[(qc, pc)] = pa_sin;
        q[(pc, qc)] = pa_sin;
    }

    // Photon hopping.
    q[(Q_C1, P_C2)] = -alpha;
    q[(P_C1, Q_C2)] = alpha;
    q[(Q_C2, P_C1)] = -alpha;
    q[(P_C2, Q_C1)] = alpha;

    DriftMatrix(q)
}

/// Builds the stationary noise matrix Ω.
pub fn build_noise(d: &DerivedQuantities, p: &PhysicalParams) -> NoiseMatrix {
    use layout::*;

    let mut w = Matrix8::zeros();
    for k in [Q_A1, P_A1, Q_A2, P_A2] {
        w[(k, k)] = d.gamma_prime;
    }
    for k in [Q_C1, P_C1, Q_C2, P_C2] {
        w[(k, k)] = d.cavity_gamma_prime;
    }
    let cross = d.v_corr * p.cavity_damping;
    w[(Q_C1, Q_C2)] = cross;
    w[(Q_C2, Q_C1)] = cross;
    w[(P_C1, P_C2)] = -cross;
    w[(P_C2, P_C1)] = -cross;
    NoiseMatrix(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub max_real_part: f64,
    /// (re, im) pairs, sorted by descending real part.
    pub eigenvalues: Vec<(f64, f64)>,
}

/// Eigenvalue-based stability test: stable iff every Re λ < −margin.
pub fn stability_check(q: &DriftMatrix, margin: f64) -> Result<StabilityReport> {
    let eig = eigenvalues(&q.0)?;
    let max_real_part = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let mut eigenvalues: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    eigenvalues.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    Ok(StabilityReport {
        stable: max_real_part < -margin,
        max_real_part,
        eigenvalues,
    })
}

pub(crate) fn eigenvalues(m: &Matrix8) -> Result<Vec<Complex<f64>>> {
    let schur = nalgebra::linalg::Schur::try_new(*m, f64::EPSILON, 10_000)
        .ok_or(Error::EigendecompositionFailure)?;
    let eig = schur.complex_eigenvalues();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigendecompositionFailure);
    }
    Ok(eig.iter().copied().collect())
}

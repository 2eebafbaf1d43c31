//! Steady-state covariance from the continuous Lyapunov equation
//! Qη + ηQᵀ = −Ω, plus a time-integration route used as an independent check.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{DriftMatrix, Matrix8, NoiseMatrix, DIM};
use crate::error::{Error, Result};
use crate::grid;
use crate::symplectic::symplectic_eigenvalues;

/// Symmetric 8×8 quadrature covariance (vacuum variance 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(pub Matrix8);

impl CovarianceMatrix {
    pub fn vacuum() -> Self {
        CovarianceMatrix(Matrix8::identity() * 0.5)
    }

    pub fn matrix(&self) -> &Matrix8 {
        &self.0
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&to_dynamic(&self.0))
    }

    /// True when every symplectic eigenvalue is ≥ 1/2 − `tol`.
    pub fn is_physical(&self, tol: f64) -> Result<bool> {
        Ok(self
            .symplectic_eigenvalues()?
            .iter()
            .all(|&nu| nu >= 0.5 - tol))
    }

    pub fn to_text(&self) -> String {
        grid::write_grid(&self.0)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let m = grid::parse_grid(text)?;
        if m.shape() != (DIM, DIM) {
            return Err(Error::ConfigParse(format!(
                "expected an 8x8 grid, got {:?}",
                m.shape()
            )));
        }
        Ok(CovarianceMatrix(Matrix8::from_iterator(m.iter().copied())))
    }
}

impl DriftMatrix {
    pub fn to_text(&self) -> String {
        grid::write_grid(&self.0)
    }
}

impl NoiseMatrix {
    pub fn to_text(&self) -> String {
        grid::write_grid(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovOptions {
    /// 1-norm condition estimate of the vectorized operator above which the
    /// solution is flagged as ill-conditioned.
    pub condition_bound: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            condition_bound: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSolution {
    pub covariance: CovarianceMatrix,
    /// ‖Qη + ηQᵀ + Ω‖_F / ‖Ω‖_F after symmetrization.
    pub residual: f64,
    /// 1-norm condition estimate of I⊗Q + Q⊗I.
    pub condition: f64,
    /// Set when `condition` exceeds [`LyapunovOptions::condition_bound`].
    pub ill_conditioned: bool,
}

/// Solves Qη + ηQᵀ = −Ω for a stable drift matrix.
pub fn solve_lyapunov(
    q: &DriftMatrix,
    omega: &NoiseMatrix,
    opts: &LyapunovOptions,
) -> Result<LyapunovSolution> {
    let abscissa = spectral_abscissa(&to_dynamic(&q.0))?;
    if abscissa >= 0.0 {
        return Err(Error::UnstableSystem {
            max_real_part: abscissa,
        });
    }
    let (eta, condition) = lyapunov_dense(&to_dynamic(&q.0), &to_dynamic(&omega.0))?;
    let eta = Matrix8::from_iterator(eta.iter().copied());
    Ok(LyapunovSolution {
        covariance: CovarianceMatrix(eta),
        residual: relative_residual(&q.0, &eta, &omega.0),
        condition,
        ill_conditioned: !(condition <= opts.condition_bound),
    })
}

/// Dense Kronecker solve of Qη + ηQᵀ = −Ω for any square size.
///
/// Returns the symmetrized solution and a 1-norm condition estimate of the
/// n²×n² operator. No stability check is made.
pub fn lyapunov_dense(q: &DMatrix<f64>, omega: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = q.nrows();
    // Rescaling time leaves η unchanged and keeps the operator O(1).
    let scale = q.amax();
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let qs = q / scale;
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(&qs) + qs.kronecker(&eye);
    let rhs = -DVector::from_column_slice((omega / scale).as_slice());

    let lu = op.clone().lu();
    let vec_eta = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let inverse = lu.try_inverse().ok_or(Error::SingularSystem)?;
    let condition = norm1(&op) * norm1(&inverse);

    let eta = DMatrix::from_column_slice(n, n, vec_eta.as_slice());
    let sym = (&eta + eta.transpose()) * 0.5;
    Ok((sym, condition))
}

/// ‖Qη + ηQᵀ + Ω‖_F / ‖Ω‖_F
pub fn relative_residual(q: &Matrix8, eta: &Matrix8, omega: &Matrix8) -> f64 {
    let r = q * eta + eta * q.transpose() + omega;
    r.norm() / omega.norm()
}

fn lyapunov_rhs(q: &DMatrix<f64>, eta: &DMatrix<f64>, omega: &DMatrix<f64>) -> DMatrix<f64> {
    q * eta + eta * q.transpose() + omega
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn to_dynamic(m: &Matrix8) -> DMatrix<f64> {
    DMatrix::from_iterator(DIM, DIM, m.iter().copied())
}

fn spectrum(q: &DMatrix<f64>) -> Result<Vec<nalgebra::Complex<f64>>> {
    let schur = nalgebra::linalg::Schur::try_new(q.clone(), f64::EPSILON, 10_000)
        .ok_or(Error::EigendecompositionFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

fn spectral_abscissa(q: &DMatrix<f64>) -> Result<f64> {
    Ok(spectrum(q)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Step control for the explicit covariance integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// Relative local error tolerance of the embedded pair.
    pub rtol: f64,
    /// Step budget. `None` derives one from the stiffness ratio.
    pub max_steps: Option<usize>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-7,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationOutcome {
    pub eta: DMatrix<f64>,
    pub steps: usize,
    pub time: f64,
    pub residual: f64,
}

/// Integrates dη/dt = Qη + ηQᵀ + Ω from `eta0` until the relative Lyapunov
/// residual drops to `tol`.
pub fn integrate_to_steady_state(
    q: &DriftMatrix,
    omega: &NoiseMatrix,
    eta0: &CovarianceMatrix,
    tol: f64,
) -> Result<CovarianceMatrix> {
    let out = integrate_lyapunov_ode(
        &to_dynamic(&q.0),
        &to_dynamic(&omega.0),
        &to_dynamic(&eta0.0),
        tol,
        &IntegrationOptions::default(),
    )?;
    let eta = Matrix8::from_iterator(out.eta.iter().copied());
    Ok(CovarianceMatrix((eta + eta.transpose()) * 0.5))
}

struct StepScales {
    h_max: f64,
    h0: f64,
    budget: usize,
}

/// Step limits from the spectrum of Q. The Lyapunov operator has eigenvalues
/// λ_i + λ_j, so its stiff end is 2 max|λ| and its slow end 2 min|Re λ|.
fn step_scales(q: &DMatrix<f64>, tol: f64, max_steps: Option<usize>) -> Result<StepScales> {
    let eig = spectrum(q)?;
    let abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::UnstableSystem {
            max_real_part: abscissa,
        });
    }
    let fast = 2.0 * eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let slow = 2.0 * eig.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    let stiffness = fast / slow;
    let decades = (1.0 / tol).ln().max(1.0) + 10.0;
    // Explicit steps are capped near 3/fast, and the slow mode needs roughly
    // decades/slow time units to decay: stiffness · decades steps in total.
    let estimate = (stiffness * decades).ceil() as usize;
    Ok(StepScales {
        h_max: 3.0 / fast,
        h0: 0.01 / fast,
        budget: max_steps.unwrap_or_else(|| 10_000 + 20 * estimate),
    })
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Integrator<'a> {
    q: &'a DMatrix<f64>,
    omega: &'a DMatrix<f64>,
    rtol: f64,
    atol: f64,
}

impl Integrator<'_> {
    /// One trial step; returns (candidate, scaled error norm).
    fn trial(&self, eta: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, f64) {
        let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
        k.push(lyapunov_rhs(self.q, eta, self.omega));
        for row in A.iter() {
            let mut stage = eta.clone();
            for (coef, kj) in row.iter().zip(&k) {
                if *coef != 0.0 {
                    stage += kj * (h * coef);
                }
            }
            k.push(lyapunov_rhs(self.q, &stage, self.omega));
        }
        let mut next = eta.clone();
        let mut err = DMatrix::zeros(eta.nrows(), eta.ncols());
        for (i, ki) in k.iter().enumerate() {
            if B5[i] != 0.0 {
                next += ki * (h * B5[i]);
            }
            err += ki * (h * (B5[i] - B4[i]));
        }
        let scale = self.atol + self.rtol * eta.amax().max(next.amax());
        (next, err.amax() / scale)
    }
}

/// Adaptive Dormand–Prince integration of the covariance equation, stopping
/// once the relative residual ‖Qη + ηQᵀ + Ω‖_F / ‖Ω‖_F is at most `tol`.
pub fn integrate_lyapunov_ode(
    q: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    eta0: &DMatrix<f64>,
    tol: f64,
    opts: &IntegrationOptions,
) -> Result<IntegrationOutcome> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be > 0, got {tol}"),
        });
    }
    let scales = step_scales(q, tol, opts.max_steps)?;
    let omega_norm = omega.norm();
    let residual_of = |eta: &DMatrix<f64>| lyapunov_rhs(q, eta, omega).norm() / omega_norm;

    let mut eta = eta0.clone();
    let mut residual = residual_of(&eta);
    if residual <= tol {
        return Ok(IntegrationOutcome {
            eta,
            steps: 0,
            time: 0.0,
            residual,
        });
    }

    let integ = Integrator {
        q,
        omega,
        rtol: opts.rtol,
        atol: opts.rtol * omega.amax() * scales.h_max,
    };
    let mut h = scales.h0;
    let mut t = 0.0;
    let mut steps = 0;
    while steps < scales.budget {
        steps += 1;
        let (next, err) = integ.trial(&eta, h);
        if err <= 1.0 {
            t += h;
            eta = next;
            residual = residual_of(&eta);
            if residual <= tol {
                return Ok(IntegrationOutcome {
                    eta,
                    steps,
                    time: t,
                    residual,
                });
            }
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h = (h * factor.clamp(0.2, 5.0)).min(scales.h_max);
    }
    Err(Error::NoConvergence { steps, residual })
}

/// Integrates the covariance equation over a fixed interval [0, `t_end`].
pub fn evolve_covariance(
    q: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    eta0: &DMatrix<f64>,
    t_end: f64,
    rtol: f64,
) -> DMatrix<f64> {
    let fast = 2.0 * q.amax().max(f64::MIN_POSITIVE) * q.nrows() as f64;
    let integ = Integrator {
        q,
        omega,
        rtol,
        atol: rtol * omega.amax() / fast,
    };
    let mut eta = eta0.clone();
    let mut t = 0.0;
    let mut h = (0.01 / fast).min(t_end);
    while t < t_end {
        let h_try = h.min(t_end - t);
        let (next, err) = integ.trial(&eta, h_try);
        if err <= 1.0 {
            t += h_try;
            eta = next;
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h = (h_try * factor.clamp(0.2, 5.0)).min(3.0 / fast);
    }
    eta
}

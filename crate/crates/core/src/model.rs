//! Single-point pipeline: parameters → Q, Ω → stability → η → E_N.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    build_drift, build_noise, stability_check, DriftMatrix, NoiseMatrix, StabilityReport,
};
use crate::entanglement::{
    log_negativity, reduce_covariance, EntanglementResult, ReducedCovariance,
};
use crate::error::Result;
use crate::params::{DerivedQuantities, ParamWarning, PhaseConvention, PhysicalParams};
use crate::steady_state::{solve_lyapunov, LyapunovOptions, LyapunovSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub phase_convention: PhaseConvention,
    /// Stability margin, rad/s. A point is stable when every Re λ < −margin.
    pub stability_margin: f64,
    pub condition_bound: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            phase_convention: PhaseConvention::AsPrinted,
            stability_margin: 0.0,
            condition_bound: LyapunovOptions::default().condition_bound,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub solution: LyapunovSolution,
    pub reduced: ReducedCovariance,
    pub entanglement: EntanglementResult,
    /// Smallest symplectic eigenvalue of the full 8×8 η.
    pub min_symplectic: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub params: PhysicalParams,
    pub warnings: Vec<ParamWarning>,
    pub derived: DerivedQuantities,
    pub drift: DriftMatrix,
    pub noise: NoiseMatrix,
    pub stability: StabilityReport,
    /// `None` when the point is not stable.
    pub steady: Option<SteadyState>,
}

impl Evaluation {
    pub fn log_negativity(&self) -> Option<f64> {
        self.steady.as_ref().map(|s| s.entanglement.log_negativity)
    }
}

pub fn evaluate(p: &PhysicalParams, opts: &ModelOptions) -> Result<Evaluation> {
    let warnings = p.validate()?;
    let derived = DerivedQuantities::new(p, opts.phase_convention);
    let drift = build_drift(&derived, p);
    let noise = build_noise(&derived, p);
    let stability = stability_check(&drift, opts.stability_margin)?;
    let steady = if stability.stable {
        let solution = solve_lyapunov(
            &drift,
            &noise,
            &LyapunovOptions {
                condition_bound: opts.condition_bound,
            },
        )?;
        let reduced = reduce_covariance(&solution.covariance);
        let entanglement = log_negativity(&reduced)?;
        debug_assert!(
            reduced
                .pt_symplectic_minimum()
                .map(|nu| (nu - entanglement.nu_minus).abs() <= 1e-6 * nu.max(1.0))
                .unwrap_or(true),
            "closed-form nu_minus disagrees with the PT spectrum"
        );
        let min_symplectic = solution.covariance.symplectic_eigenvalues()?[0];
        Some(SteadyState {
            solution,
            reduced,
            entanglement,
            min_symplectic,
        })
    } else {
        None
    };
    Ok(Evaluation {
        params: *p,
        warnings,
        derived,
        drift,
        noise,
        stability,
        steady,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_vacuum_point() {
        let mut p = PhysicalParams::experimental();
        p.power = 0.0;
        let ev = evaluate(&p, &ModelOptions::default()).unwrap();
        assert!(ev.stability.stable);
        assert_eq!(ev.log_negativity(), Some(0.0));
        let s = ev.steady.unwrap();
        assert!((s.min_symplectic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unstable_point_has_no_steady_state() {
        let mut p = PhysicalParams::experimental();
        p.power = 0.0;
        p.pa_gain = 0.3 * p.cavity_damping;
        let ev = evaluate(&p, &ModelOptions::default()).unwrap();
        assert!(!ev.stability.stable);
        assert!(ev.steady.is_none());
        assert_eq!(ev.log_negativity(), None);
    }

    #[test]
    fn entangled_operating_point() {
        let mut p = PhysicalParams::experimental();
        let g = p.cavity_damping;
        p.squeezing = 1.5;
        p.pa_gain = 0.2 * g;
        p.hopping = 0.0015 * g;
        p.tunneling = 0.0002 * g;
        let ev = evaluate(&p, &ModelOptions::default()).unwrap();
        let s = ev.steady.unwrap();
        assert!(s.entanglement.log_negativity > 0.0);
        assert!(s.entanglement.det_z < 0.0);
        assert!(s.min_symplectic >= 0.5 - 1e-9);
        assert!(s.solution.residual <= 1e-10);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = PhysicalParams::experimental();
        p.length = -1.0;
        assert!(evaluate(&p, &ModelOptions::default()).is_err());
    }
}

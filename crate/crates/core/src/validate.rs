//! Built-in invariant suite: oracle cross-checks and physicality on the
//! experimental parameter set and the figure presets.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix2, Matrix4};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{build_drift, build_noise, stability_check};
use crate::entanglement::{log_negativity, ReducedCovariance};
use crate::error::Result;
use crate::model::{evaluate, ModelOptions};
use crate::params::{
    mean_fields, DerivedQuantities, MeanFieldOptions, PhaseConvention, PhysicalParams,
};
use crate::steady_state::{
    integrate_to_steady_state, solve_lyapunov, CovarianceMatrix, LyapunovOptions,
};
use crate::sweep::{preset, Preset};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    fn push(&mut self, name: &'static str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(CheckResult {
            name,
            passed,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        write!(f, "{} passed, {} failed", self.passed(), self.failed())
    }
}

/// Random parameter set around the experimental values. Draws are retried
/// until the drift matrix is stable with max Re λ < −`margin`·Γ.
pub fn random_stable_params(rng: &mut impl Rng, margin: f64) -> PhysicalParams {
    loop {
        let mut p = PhysicalParams::experimental();
        let g = p.cavity_damping;
        p.temperature = rng.gen_range(0.0..0.2e-3);
        p.squeezing = rng.gen_range(0.0..2.0);
        p.pa_gain = rng.gen_range(0.0..0.2) * g;
        p.pa_phase = rng.gen_range(0.0..2.0 * PI);
        p.hopping = rng.gen_range(0.0..0.01) * g;
        p.tunneling = rng.gen_range(0.0..0.02) * g;
        p.power *= rng.gen_range(0.5..1.5);
        let d = DerivedQuantities::new(&p, PhaseConvention::AsPrinted);
        let q = build_drift(&d, &p);
        if let Ok(s) = stability_check(&q, margin * g) {
            if s.stable {
                return p;
            }
        }
    }
}

/// Relative Frobenius distance between the direct Lyapunov solution and the
/// time-integrated covariance started from vacuum.
pub fn oracle_discrepancy(p: &PhysicalParams, ode_tol: f64) -> Result<f64> {
    let d = DerivedQuantities::new(p, PhaseConvention::AsPrinted);
    let q = build_drift(&d, p);
    let w = build_noise(&d, p);
    let direct = solve_lyapunov(&q, &w, &LyapunovOptions::default())?
        .covariance
        .0;
    let ode = integrate_to_steady_state(&q, &w, &CovarianceMatrix::vacuum(), ode_tol)?.0;
    Ok((direct - ode).norm() / direct.norm())
}

/// Bisects the stability flip of the drift matrix along the gain λ (in Γ)
/// for the given base, down to `tol` (in Γ).
pub fn gain_stability_boundary(base: &PhysicalParams, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let stable_at = |lam: f64| -> Result<bool> {
        let mut p = *base;
        p.pa_gain = lam * p.cavity_damping;
        let d = DerivedQuantities::new(&p, PhaseConvention::AsPrinted);
        Ok(stability_check(&build_drift(&d, &p), 0.0)?.stable)
    };
    let (mut lo, mut hi) = (lo, hi);
    let lo_stable = stable_at(lo)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if stable_at(mid)? == lo_stable {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Runs every check; `draws` random parameter sets go through the ODE oracle.
pub fn run_validation(seed: u64, draws: usize) -> ValidationReport {
    let mut report = ValidationReport::default();

    report.push("lyapunov_vs_time_integration", {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..draws)
            .map(|_| oracle_discrepancy(&random_stable_params(&mut rng, 1e-2), 1e-10))
            .collect::<Result<Vec<f64>>>()
            .map(|errs| {
                let worst = errs.iter().copied().fold(0.0, f64::max);
                (
                    worst <= 1e-5,
                    format!("{draws} draws, worst relative error {worst:.3e}"),
                )
            })
    });

    report.push("mean_field_fixed_point", {
        let p = preset("fig2").expect("preset").base;
        mean_fields(&p, -p.omega_m, &MeanFieldOptions::default()).map(|mf| {
            let r = mf.fixed_point_residual(&p);
            (r < 1e-10, format!("relative imbalance {r:.3e}"))
        })
    });

    report.push("preset_physicality", {
        let mut worst_nu = f64::INFINITY;
        let mut worst_res: f64 = 0.0;
        let mut stable = 0;
        let mut result = Ok(());
        for name in Preset::ALL {
            let spec = preset(name.as_str()).expect("preset");
            for pt in spec.grid().into_iter().step_by(7) {
                match evaluate(&spec.params_at(&pt), &spec.options) {
                    Ok(ev) => {
                        if let Some(s) = ev.steady {
                            stable += 1;
                            worst_nu = worst_nu.min(s.min_symplectic);
                            worst_res = worst_res.max(s.solution.residual);
                        }
                    }
                    Err(e) => {
                        result = Err(e);
                        break;
                    }
                }
            }
        }
        result.map(|_| {
            (
                worst_nu >= 0.5 - 1e-9 && worst_res <= 1e-10,
                format!("{stable} stable points, min symplectic {worst_nu:.12}, max residual {worst_res:.3e}"),
            )
        })
    });

    report.push("vacuum_is_separable", {
        log_negativity(&ReducedCovariance::new(Matrix4::identity() * 0.5)).map(|r| {
            (
                r.log_negativity == 0.0,
                format!("E_N = {}", r.log_negativity),
            )
        })
    });

    report.push("two_mode_squeezed_closed_form", {
        [0.1, 0.5, 1.0]
            .into_iter()
            .map(|s| {
                log_negativity(&two_mode_squeezed(s)).map(|r| (r.log_negativity - 2.0 * s).abs())
            })
            .collect::<Result<Vec<f64>>>()
            .map(|errs| {
                let worst = errs.iter().copied().fold(0.0, f64::max);
                (worst <= 1e-10, format!("max |E_N - 2s| = {worst:.3e}"))
            })
    });

    report.push("closed_form_vs_pt_spectrum", {
        let spec = preset("fig2").expect("preset");
        evaluate(&spec.base, &spec.options).and_then(|ev| {
            let s = ev.steady.expect("operating point is stable");
            let direct = s.reduced.pt_symplectic_minimum()?;
            let diff = (direct - s.entanglement.nu_minus).abs();
            Ok((diff <= 1e-10, format!("|difference| = {diff:.3e}")))
        })
    });

    report.push("local_rotation_invariance", {
        let spec = preset("fig2").expect("preset");
        evaluate(&spec.base, &spec.options).and_then(|ev| {
            let sigma = ev.steady.expect("operating point is stable").reduced.sigma;
            let base = log_negativity(&ReducedCovariance::new(sigma))?;
            let mut worst: f64 = 0.0;
            for (t1, t2) in [(0.3, -1.1), (2.0, 0.0), (-2.9, 1.7)] {
                let mut rot = Matrix4::zeros();
                rot.fixed_view_mut::<2, 2>(0, 0).copy_from(&rotation(t1));
                rot.fixed_view_mut::<2, 2>(2, 2).copy_from(&rotation(t2));
                let r = log_negativity(&ReducedCovariance::new(rot * sigma * rot.transpose()))?;
                worst = worst
                    .max((r.nu_minus - base.nu_minus).abs())
                    .max((r.log_negativity - base.log_negativity).abs());
            }
            Ok((worst <= 1e-10, format!("max change {worst:.3e}")))
        })
    });

    report.push("gain_stability_boundary", {
        let mut p = PhysicalParams::experimental();
        p.power = 0.0;
        gain_stability_boundary(&p, 0.2, 0.3, 1e-9).map(|lam| {
            let err = (lam - 0.25).abs();
            (err <= 1e-6, format!("flip at lambda = {lam:.10} Gamma"))
        })
    });

    report.push("unstable_points_have_no_entanglement", {
        let mut p = PhysicalParams::experimental();
        p.power = 0.0;
        p.pa_gain = 0.3 * p.cavity_damping;
        evaluate(&p, &ModelOptions::default()).map(|ev| {
            (
                !ev.stability.stable && ev.log_negativity().is_none(),
                format!(
                    "max Re = {:.4} Gamma",
                    ev.stability.max_real_part / p.cavity_damping
                ),
            )
        })
    });

    report
}

fn rotation(t: f64) -> Matrix2<f64> {
    Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos())
}

fn two_mode_squeezed(s: f64) -> ReducedCovariance {
    let c = 0.5 * (2.0 * s).cosh();
    let h = 0.5 * (2.0 * s).sinh();
    #[rustfmt::skip]
    let m = Matrix4::new(
        c, 0.0, h, 0.0,
        0.0, c, 0.0, -h,
        h, 0.0, c, 0.0,
        0.0, -h, 0.0, c,
    );
    ReducedCovariance::new(m)
}

//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::Matrix4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use optomech::dynamics::{build_drift, stability_check};
use optomech::entanglement::{log_negativity, ReducedCovariance};
use optomech::params::{DerivedQuantities, PhaseConvention, PhysicalParams};
use optomech::sweep::{
    find_threshold, preset, run_sweep, Curve, Preset, SweepResult, ThresholdKind,
};
use optomech::validate::{gain_stability_boundary, oracle_discrepancy, random_stable_params};
use optomech::Result;

const MONOTONE_TOL: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Largest increase between consecutive stable points.
fn max_rise(values: &[Option<f64>]) -> f64 {
    values
        .windows(2)
        .filter_map(|w| Some(w[1]? - w[0]?))
        .fold(0.0, f64::max)
}

fn stable_values(c: &Curve) -> Vec<(f64, f64)> {
    c.xs.iter()
        .zip(&c.log_negativity)
        .filter_map(|(&x, e)| e.map(|e| (x, e)))
        .collect()
}

/// True when `ys` rises to a single maximum strictly inside the range and
/// falls afterwards, with the maximum above zero.
fn single_interior_maximum(ys: &[f64]) -> (bool, usize) {
    let Some((k, &peak)) = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return (false, 0);
    };
    let rising = ys[..=k].windows(2).all(|w| w[1] >= w[0] - MONOTONE_TOL);
    let falling = ys[k..].windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOL);
    let interior = k > 0 && k + 1 < ys.len();
    (peak > 0.0 && interior && rising && falling, k)
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 50;
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let p = random_stable_params(&mut rng, 1e-2);
        worst = worst.max(oracle_discrepancy(&p, 1e-10)?);
    }
    let elapsed = start.elapsed();
    Ok(outcome(
        worst <= 1e-5 && elapsed <= Duration::from_secs(60),
        format!(
            "{draws} draws, worst relative Frobenius error {worst:.3e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn criterion_2(results: &[SweepResult]) -> Result<Outcome> {
    let mut worst_nu = f64::INFINITY;
    let mut worst_res: f64 = 0.0;
    let mut stable = 0;
    let mut errors = 0;
    let mut det_z_violations = 0;
    for res in results {
        for r in &res.records {
            if r.error.is_some() {
                errors += 1;
            }
            if let (Some(nu), Some(residual)) = (r.min_symplectic, r.residual) {
                stable += 1;
                worst_nu = worst_nu.min(nu);
                worst_res = worst_res.max(residual);
                if r.log_negativity.unwrap_or(0.0) > 0.0 && r.det_z.unwrap_or(0.0) >= 0.0 {
                    det_z_violations += 1;
                }
            }
        }
    }
    Ok(outcome(
        stable > 0
            && errors == 0
            && worst_nu >= 0.5 - 1e-9
            && worst_res <= 1e-10
            && det_z_violations == 0,
        format!(
            "{stable} stable points, {errors} errors, min symplectic eigenvalue {worst_nu:.12}, \
             max relative residual {worst_res:.3e}, E_N>0 with det Z>=0: {det_z_violations}"
        ),
    ))
}

fn criterion_3() -> Result<Outcome> {
    let vacuum = log_negativity(&ReducedCovariance::new(Matrix4::identity() * 0.5))?;
    let mut worst: f64 = 0.0;
    for s in [0.1f64, 0.5, 1.0] {
        let c = 0.5 * (2.0 * s).cosh();
        let h = 0.5 * (2.0 * s).sinh();
        #[rustfmt::skip]
        let sigma = Matrix4::new(
            c, 0.0, h, 0.0,
            0.0, c, 0.0, -h,
            h, 0.0, c, 0.0,
            0.0, -h, 0.0, c,
        );
        let r = log_negativity(&ReducedCovariance::new(sigma))?;
        worst = worst.max((r.log_negativity - 2.0 * s).abs());
    }
    Ok(outcome(
        vacuum.log_negativity == 0.0 && worst <= 1e-10,
        format!(
            "vacuum E_N = {}, max |E_N - 2s| = {worst:.3e}",
            vacuum.log_negativity
        ),
    ))
}

fn criterion_4() -> Result<Outcome> {
    let start = Instant::now();
    let spec = preset("fig2")?;
    let res = run_sweep(&spec, None)?;
    let curves = res.curves();
    let mut ok = true;
    let mut notes = Vec::new();
    for (curve, member) in curves.iter().zip(spec.family_members()) {
        let rise = max_rise(&curve.log_negativity);
        let death = find_threshold(&member, ThresholdKind::Death, 1e-4);
        let beta = curve.family.unwrap_or(f64::NAN);
        match &death {
            Ok(d) => notes.push(format!(
                "beta={beta}: max rise {rise:.1e}, T_death={:.5} mK",
                d.crossing
            )),
            Err(e) => notes.push(format!("beta={beta}: max rise {rise:.1e}, {e}")),
        }
        ok &= rise <= MONOTONE_TOL && death.is_ok();
    }
    // Family is ordered by increasing β.
    let mut ordering = 0.0f64;
    for pair in curves.windows(2) {
        for (lo, hi) in pair[0].log_negativity.iter().zip(&pair[1].log_negativity) {
            if let (Some(small_beta), Some(large_beta)) = (lo, hi) {
                ordering = ordering.max(large_beta - small_beta);
            }
        }
    }
    notes.push(format!("max excess of larger-beta curve {ordering:.1e}"));
    let elapsed = start.elapsed();
    notes.push(format!("{:.1} s", elapsed.as_secs_f64()));
    ok &= ordering <= MONOTONE_TOL && elapsed <= Duration::from_secs(30);
    Ok(outcome(ok, notes.join("; ")))
}

fn criterion_5() -> Result<Outcome> {
    let spec = preset("fig4")?;
    let res = run_sweep(&spec, None)?;
    let mut ok = true;
    let mut notes = Vec::new();
    let mut r_mins = Vec::new();
    for (curve, member) in res.curves().iter().zip(spec.family_members()) {
        let lam = curve.family.unwrap_or(f64::NAN);
        let pts = stable_values(curve);
        let peak = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        match find_threshold(&member, ThresholdKind::Birth, 1e-3) {
            Ok(b) => {
                let r_min = b.crossing;
                let below_zero = pts
                    .iter()
                    .filter(|(x, _)| *x < b.x_lo)
                    .all(|(_, e)| *e == 0.0);
                let above: Vec<f64> = pts
                    .iter()
                    .filter(|(x, _)| *x >= b.x_hi)
                    .map(|p| p.1)
                    .collect();
                let (shape, _) = single_interior_maximum(&above);
                ok &= r_min > 0.0 && below_zero && shape;
                notes.push(format!(
                    "lambda={lam}: r_min={r_min:.4}, zero below={below_zero}, single interior max={shape}"
                ));
                r_mins.push(r_min);
            }
            Err(e) => {
                ok = false;
                notes.push(format!("lambda={lam}: max E_N {peak:.3e}, {e}"));
            }
        }
    }
    let increasing = r_mins.len() == res.curves().len() && r_mins.windows(2).all(|w| w[1] > w[0]);
    ok &= increasing;
    notes.push(format!("r_min increasing across family: {increasing}"));
    Ok(outcome(ok, notes.join("; ")))
}

fn criterion_6() -> Result<Outcome> {
    let spec = preset("fig3")?;
    let res = run_sweep(&spec, None)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for curve in res.curves() {
        let pts = stable_values(&curve);
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (shape, k) = single_interior_maximum(&ys);
        ok &= shape;
        let (x_at, y_at) = pts.get(k).copied().unwrap_or((f64::NAN, f64::NAN));
        notes.push(format!(
            "T={} mK: max E_N {y_at:.4} at lambda={x_at:.3} over {} stable points, interior single max={shape}",
            curve.family.unwrap_or(f64::NAN),
            pts.len()
        ));
    }
    Ok(outcome(ok, notes.join("; ")))
}

fn criterion_7() -> Result<Outcome> {
    let spec = preset("fig5")?;
    let res = run_sweep(&spec, None)?;
    let (na, nl) = (spec.axes[0].points, spec.axes[1].points);
    let alphas = spec.axes[0].values();
    let column = |i: usize| -> Vec<Option<f64>> {
        res.records[i * nl..(i + 1) * nl]
            .iter()
            .map(|r| r.log_negativity)
            .collect()
    };
    let col_max = |i: usize| column(i).into_iter().flatten().fold(0.0, f64::max);
    let base = col_max(0);
    let band: Vec<f64> = (1..na)
        .filter(|&i| col_max(i) > base)
        .map(|i| alphas[i])
        .collect();
    let band_ok = !band.is_empty();

    let mut death_ok = true;
    let mut checked = 0;
    let mut worst_rise: f64 = 0.0;
    for i in (0..na).filter(|&i| alphas[i] >= 0.05 - 1e-12) {
        let col = column(i);
        let rise = max_rise(&col);
        worst_rise = worst_rise.max(rise);
        let vals: Vec<f64> = col.iter().flatten().copied().collect();
        let has_death = vals.windows(2).any(|w| w[0] > 0.0 && w[1] == 0.0);
        death_ok &= rise <= MONOTONE_TOL && has_death;
        checked += 1;
    }
    Ok(outcome(
        band_ok && death_ok && checked > 0,
        format!(
            "alpha=0 column max {base:.4}; alphas beating it: {}; {checked} columns with alpha>=0.05: \
             max rise {worst_rise:.1e}, all with death point={death_ok}",
            if band.is_empty() { "none".to_string() } else { format!("{band:?}") }
        ),
    ))
}

fn criterion_8() -> Result<Outcome> {
    let mut p = PhysicalParams::experimental();
    p.power = 0.0;
    let g = p.cavity_damping;
    let flip = gain_stability_boundary(&p, 0.2, 0.3, 1e-9)?;
    let mut worst: f64 = 0.0;
    for lam in [0.1, 0.2, 0.24, 0.26, 0.3] {
        let mut q = p;
        q.pa_gain = lam * g;
        let d = DerivedQuantities::new(&q, PhaseConvention::AsPrinted);
        let report = stability_check(&build_drift(&d, &q), 0.0)?;
        let expected = -0.5 * g + 2.0 * lam * g;
        let nearest = report
            .eigenvalues
            .iter()
            .map(|(re, im)| ((re - expected).powi(2) + im.powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest / g);
    }
    let err = (flip - 0.25).abs();
    Ok(outcome(
        err <= 1e-6 && worst <= 1e-9,
        format!("flip at lambda = {flip:.10} Gamma (|error| {err:.1e}), max distance to -Gamma/2+2lambda {worst:.1e} Gamma"),
    ))
}

fn payload(path: &std::path::Path) -> std::io::Result<String> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with("# timestamp_unix:"))
        .collect::<Vec<_>>()
        .join("\n"))
}

fn criterion_9() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let bin = env!("CARGO_BIN_EXE_optomech");
    let mut payloads = Vec::new();
    for (i, jobs) in ["1", "4", "1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(bin)
            .args(["preset", "fig2", "--jobs", jobs, "--out"])
            .arg(&out)
            .status()?;
        if !status.success() {
            return Ok(outcome(false, format!("run {i} exited with {status}")));
        }
        payloads.push(payload(&out)?);
    }
    let identical = payloads.windows(2).all(|w| w[0] == w[1]);
    Ok(outcome(
        identical,
        format!(
            "4 runs (jobs 1,4,1,4), {} bytes each, identical={identical}",
            payloads[0].len()
        ),
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let presets: Result<Vec<SweepResult>> = Preset::ALL
        .iter()
        .map(|p| preset(p.as_str()).and_then(|s| run_sweep(&s, None)))
        .collect();

    let criteria: Vec<(&str, Result<Outcome>)> = vec![
        ("oracle equivalence", criterion_1()),
        ("physicality", presets.and_then(|r| criterion_2(&r))),
        ("closed-form entanglement", criterion_3()),
        ("temperature sweep shape", criterion_4()),
        ("squeezing sweep shape", criterion_5()),
        ("gain sweep shape", criterion_6()),
        ("hopping-gain map shape", criterion_7()),
        ("stability boundary", criterion_8()),
        ("determinism", criterion_9()),
    ];

    let mut failures = 0;
    for (i, (name, result)) in criteria.into_iter().enumerate() {
        let o = result.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.passed {
            failures += 1;
        }
        println!(
            "{} criterion {} ({name}): {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of 9 criteria passed in {:.1} s",
        9 - failures,
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

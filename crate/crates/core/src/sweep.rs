//! Parameter sweeps over one or two axes (optionally repeated over a discrete
//! family), entanglement birth/death thresholds, and the figure presets.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{evaluate, ModelOptions};
use crate::params::{ParamName, PhysicalParams};

/// Linearly spaced axis, in display units (mK, multiples of Γ, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: ParamName,
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(name: ParamName, start: f64, end: f64, points: usize) -> Self {
        Self {
            name,
            start,
            end,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.end
                } else {
                    self.start + (self.end - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::InvalidSweep(format!(
                "axis `{}` has a non-finite range",
                self.name
            )));
        }
        if self.start == self.end {
            return Err(Error::InvalidSweep(format!(
                "axis `{}` has an empty range",
                self.name
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidSweep(format!(
                "axis `{}` needs at least 2 points, got {}",
                self.name, self.points
            )));
        }
        Ok(())
    }
}

/// Discrete second parameter, one curve per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub name: ParamName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub label: Option<String>,
    pub base: PhysicalParams,
    pub axes: Vec<Axis>,
    pub family: Option<Family>,
    pub options: ModelOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidSweep(format!(
                "expected 1 or 2 axes, got {}",
                self.axes.len()
            )));
        }
        for a in &self.axes {
            a.validate()?;
        }
        let mut names: Vec<ParamName> = self.axes.iter().map(|a| a.name).collect();
        if let Some(f) = &self.family {
            if f.values.is_empty() {
                return Err(Error::InvalidSweep(format!(
                    "family `{}` has no values",
                    f.name
                )));
            }
            if f.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSweep(format!(
                    "family `{}` has a non-finite value",
                    f.name
                )));
            }
            names.push(f.name);
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidSweep(format!(
                    "parameter `{n}` is swept twice"
                )));
            }
        }
        if !(self.options.stability_margin >= 0.0) {
            return Err(Error::InvalidSweep("stability margin must be >= 0".into()));
        }
        self.base.validate()?;
        Ok(())
    }

    /// Grid points in output order: family outermost, last axis fastest.
    pub fn grid(&self) -> Vec<GridPoint> {
        let families: Vec<Option<f64>> = match &self.family {
            Some(f) => f.values.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let axis_values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = Vec::new();
        for fam in families {
            let mut coords = vec![Vec::new()];
            for vals in &axis_values {
                coords = coords
                    .into_iter()
                    .flat_map(|prefix| {
                        vals.iter().map(move |&v| {
                            let mut c = prefix.clone();
                            c.push(v);
                            c
                        })
                    })
                    .collect();
            }
            for c in coords {
                out.push(GridPoint {
                    index: out.len(),
                    family: fam,
                    coords: c,
                });
            }
        }
        out
    }

    /// Physical parameters at a grid point.
    pub fn params_at(&self, point: &GridPoint) -> PhysicalParams {
        let mut assignments: Vec<(ParamName, f64)> = self
            .axes
            .iter()
            .map(|a| a.name)
            .zip(point.coords.iter().copied())
            .collect();
        if let (Some(f), Some(v)) = (&self.family, point.family) {
            assignments.push((f.name, v));
        }
        // Γ first so that Γ-relative values use the swept Γ.
        assignments.sort_by_key(|(n, _)| *n != ParamName::CavityDamping);
        let mut p = self.base;
        for (name, value) in assignments {
            p.set_display(name, value);
        }
        p
    }

    /// Splits a family sweep into one single-curve spec per member.
    pub fn family_members(&self) -> Vec<SweepSpec> {
        match &self.family {
            None => vec![self.clone()],
            Some(f) => f
                .values
                .iter()
                .map(|&v| {
                    let mut s = self.clone();
                    s.family = None;
                    s.base.set_display(f.name, v);
                    s
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub family: Option<f64>,
    /// One value per axis, display units.
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub point: GridPoint,
    pub stable: bool,
    /// Absent for unstable or failed points.
    pub log_negativity: Option<f64>,
    pub nu_minus: Option<f64>,
    pub residual: Option<f64>,
    pub det_z: Option<f64>,
    pub min_symplectic: Option<f64>,
    pub error: Option<Error>,
}

impl SweepRecord {
    pub fn status(&self) -> &'static str {
        match (&self.error, self.stable) {
            (Some(e), _) => e.kind(),
            (None, true) => "ok",
            (None, false) => "unstable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub records: Vec<SweepRecord>,
    pub timestamp_unix: u64,
    pub version: &'static str,
}

/// One 1-axis curve (per family member) of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub family: Option<f64>,
    pub xs: Vec<f64>,
    pub log_negativity: Vec<Option<f64>>,
}

fn evaluate_point(spec: &SweepSpec, point: GridPoint) -> SweepRecord {
    let p = spec.params_at(&point);
    let mut rec = SweepRecord {
        point,
        stable: false,
        log_negativity: None,
        nu_minus: None,
        residual: None,
        det_z: None,
        min_symplectic: None,
        error: None,
    };
    match evaluate(&p, &spec.options) {
        Ok(ev) => {
            rec.stable = ev.stability.stable;
            if let Some(s) = ev.steady {
                rec.log_negativity = Some(s.entanglement.log_negativity);
                rec.nu_minus = Some(s.entanglement.nu_minus);
                rec.residual = Some(s.solution.residual);
                rec.det_z = Some(s.entanglement.det_z);
                rec.min_symplectic = Some(s.min_symplectic);
            }
        }
        Err(e) => rec.error = Some(e),
    }
    rec
}

/// Evaluates every grid point. `jobs = Some(1)` runs serially, `Some(n)` on a
/// dedicated pool of n threads, `None` on the global pool. Output order is the
/// grid order regardless.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let grid = spec.grid();
    let records: Vec<SweepRecord> = match jobs {
        Some(1) => grid
            .into_iter()
            .map(|pt| evaluate_point(spec, pt))
            .collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Io(e.to_string()))?;
            pool.install(|| {
                grid.into_par_iter()
                    .map(|pt| evaluate_point(spec, pt))
                    .collect()
            })
        }
        None => grid
            .into_par_iter()
            .map(|pt| evaluate_point(spec, pt))
            .collect(),
    };
    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(SweepResult {
        spec: spec.clone(),
        records,
        timestamp_unix,
        version: env!("CARGO_PKG_VERSION"),
    })
}

impl SweepResult {
    /// Curves along the first axis, one per family member. Only meaningful
    /// for 1-axis sweeps; for 2-axis sweeps each row of the second axis is
    /// flattened into the same curve.
    pub fn curves(&self) -> Vec<Curve> {
        let mut out: Vec<Curve> = Vec::new();
        for r in &self.records {
            match out.last_mut() {
                Some(c) if c.family == r.point.family => {
                    c.xs.push(r.point.coords[0]);
                    c.log_negativity.push(r.log_negativity);
                }
                _ => out.push(Curve {
                    family: r.point.family,
                    xs: vec![r.point.coords[0]],
                    log_negativity: vec![r.log_negativity],
                }),
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let spec = &self.spec;
        writeln!(w, "# generator: optomech {}", self.version)?;
        if let Some(label) = &spec.label {
            writeln!(w, "# preset: {label}")?;
        }
        let base: Vec<String> = ParamName::ALL
            .iter()
            .map(|&n| match n.display_unit() {
                "1" => format!("{}={}", n, spec.base.get_display_shortest(n)),
                unit => format!("{}={} {}", n, spec.base.get_display_shortest(n), unit),
            })
            .collect();
        writeln!(w, "# base: {}", base.join(", "))?;
        writeln!(
            w,
            "# options: phase_convention={}, stability_margin={} rad/s, condition_bound={:e}",
            match spec.options.phase_convention {
                crate::params::PhaseConvention::AsPrinted => "as-printed",
                crate::params::PhaseConvention::Doubled => "doubled",
            },
            spec.options.stability_margin,
            spec.options.condition_bound
        )?;
        for a in &spec.axes {
            writeln!(
                w,
                "# axis: {} [{}] {} .. {}, {} points",
                a.name,
                a.name.display_unit(),
                a.start,
                a.end,
                a.points
            )?;
        }
        if let Some(f) = &spec.family {
            let vals: Vec<String> = f.values.iter().map(|v| v.to_string()).collect();
            writeln!(
                w,
                "# family: {} [{}] = {}",
                f.name,
                f.name.display_unit(),
                vals.join(", ")
            )?;
        }
        writeln!(w, "# timestamp_unix: {}", self.timestamp_unix)?;

        let mut csv = csv::Writer::from_writer(w);
        let mut header: Vec<String> = Vec::new();
        if let Some(f) = &spec.family {
            header.push(f.name.column_label());
        }
        header.extend(spec.axes.iter().map(|a| a.name.column_label()));
        header.extend(["E_N", "nu_minus", "stable", "residual", "status"].map(String::from));
        csv.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            if let Some(v) = r.point.family {
                row.push(v.to_string());
            }
            row.extend(r.point.coords.iter().map(|v| v.to_string()));
            row.push(fmt_opt(r.log_negativity, false));
            row.push(fmt_opt(r.nu_minus, false));
            row.push(r.stable.to_string());
            row.push(fmt_opt(r.residual, true));
            row.push(r.status().to_string());
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

fn fmt_opt(v: Option<f64>, sci: bool) -> String {
    match v {
        None => "nan".to_string(),
        Some(x) if sci => format!("{x:e}"),
        Some(x) => x.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    /// E_N > 0 below the threshold, E_N = 0 above it.
    Death,
    /// E_N = 0 below the threshold, E_N > 0 above it.
    Birth,
}

impl ThresholdKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdKind::Death => "death",
            ThresholdKind::Birth => "birth",
        }
    }
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ThresholdKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "death" => Ok(ThresholdKind::Death),
            "birth" => Ok(ThresholdKind::Birth),
            _ => Err(Error::ConfigParse(format!(
                "unknown threshold kind `{s}` (death|birth)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub kind: ThresholdKind,
    pub axis: ParamName,
    pub x_lo: f64,
    pub x_hi: f64,
    pub e_n_lo: f64,
    pub e_n_hi: f64,
    /// Linear interpolation of 1/2 − ϱ⁻ across the final bracket.
    pub crossing: f64,
    pub evaluations: usize,
}

impl fmt::Display for ThresholdReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} threshold along {} [{}]: {} in [{}, {}] (E_N = {:e} .. {:e})",
            self.kind,
            self.axis,
            self.axis.display_unit(),
            self.crossing,
            self.x_lo,
            self.x_hi,
            self.e_n_lo,
            self.e_n_hi
        )
    }
}

/// Locates where E_N > 0 switches on (birth) or off (death) along the single
/// axis of `spec`, bracketing on the axis grid and then bisecting down to
/// `resolution` (axis units).
pub fn find_threshold(
    spec: &SweepSpec,
    kind: ThresholdKind,
    resolution: f64,
) -> Result<ThresholdReport> {
    if spec.axes.len() != 1 || spec.family.is_some() {
        return Err(Error::InvalidSweep(
            "threshold search needs exactly one axis and no family".into(),
        ));
    }
    if !(resolution > 0.0) {
        return Err(Error::InvalidSweep(format!(
            "resolution must be > 0, got {resolution}"
        )));
    }
    let coarse = run_sweep(spec, None)?;
    let axis = &spec.axes[0];
    let mut evaluations = coarse.records.len();

    let bracket = coarse.records.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let (ea, eb) = (a.log_negativity?, b.log_negativity?);
        let hit = match kind {
            ThresholdKind::Death => ea > 0.0 && eb == 0.0,
            ThresholdKind::Birth => ea == 0.0 && eb > 0.0,
        };
        hit.then_some((a.clone(), b.clone()))
    });
    let Some((mut lo, mut hi)) = bracket else {
        return Err(Error::NoCrossing {
            kind: kind.as_str(),
            axis: axis.name.as_str(),
            start: axis.start,
            end: axis.end,
        });
    };

    let lo_entangled = lo.log_negativity.unwrap_or(0.0) > 0.0;
    while (hi.point.coords[0] - lo.point.coords[0]).abs() > resolution {
        let mid = 0.5 * (lo.point.coords[0] + hi.point.coords[0]);
        let rec = evaluate_point(
            spec,
            GridPoint {
                index: 0,
                family: None,
                coords: vec![mid],
            },
        );
        evaluations += 1;
        if let Some(e) = rec.error {
            return Err(e);
        }
        let Some(e_n) = rec.log_negativity else {
            return Err(Error::InvalidSweep(format!(
                "unstable point at {} = {mid} inside the threshold bracket",
                axis.name
            )));
        };
        if (e_n > 0.0) == lo_entangled {
            lo = rec;
        } else {
            hi = rec;
        }
    }

    let (x_lo, x_hi) = (lo.point.coords[0], hi.point.coords[0]);
    let g_lo = 0.5 - lo.nu_minus.unwrap_or(0.5);
    let g_hi = 0.5 - hi.nu_minus.unwrap_or(0.5);
    let crossing = if g_lo != g_hi {
        (x_lo + (x_hi - x_lo) * g_lo / (g_lo - g_hi)).clamp(x_lo.min(x_hi), x_lo.max(x_hi))
    } else {
        0.5 * (x_lo + x_hi)
    };
    Ok(ThresholdReport {
        kind,
        axis: axis.name,
        x_lo,
        x_hi,
        e_n_lo: lo.log_negativity.unwrap_or(0.0),
        e_n_hi: hi.log_negativity.unwrap_or(0.0),
        crossing,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig2, Preset::Fig3, Preset::Fig4, Preset::Fig5];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Stability margin used by the presets, in units of Γ.
pub const PRESET_MARGIN: f64 = 1e-6;

/// Built-in sweeps. Fixed parameters are pinned; axis ranges
/// and family values are suggestions and may be overridden.
pub fn preset(name: &str) -> Result<SweepSpec> {
    let which: Preset = name.parse()?;
    let mut base = PhysicalParams::experimental();
    let g = base.cavity_damping;
    let options = ModelOptions {
        stability_margin: PRESET_MARGIN * g,
        ..ModelOptions::default()
    };
    let set = |p: &mut PhysicalParams, n: ParamName, v: f64| p.set_display(n, v);
    let (axes, family) = match which {
        Preset::Fig2 => {
            set(&mut base, ParamName::Squeezing, 1.5);
            set(&mut base, ParamName::PumpPhase, 0.0);
            set(&mut base, ParamName::Gain, 0.2);
            set(&mut base, ParamName::Hopping, 0.0015);
            (
                vec![Axis::new(ParamName::Temperature, 0.0, 0.1, 51)],
                Some(Family {
                    name: ParamName::Tunneling,
                    values: vec![0.0002, 0.002, 0.02],
                }),
            )
        }
        Preset::Fig3 => {
            set(&mut base, ParamName::Squeezing, 3.0);
            set(&mut base, ParamName::PumpPhase, 0.0);
            set(&mut base, ParamName::Tunneling, 0.0002);
            set(&mut base, ParamName::Hopping, 0.0015);
            (
                vec![Axis::new(ParamName::Gain, 0.0, 0.3, 61)],
                Some(Family {
                    name: ParamName::Temperature,
                    values: vec![0.01, 0.02, 0.03],
                }),
            )
        }
        Preset::Fig4 => {
            set(&mut base, ParamName::Temperature, 0.2);
            set(&mut base, ParamName::PumpPhase, 0.0);
            set(&mut base, ParamName::Tunneling, 0.0002);
            set(&mut base, ParamName::Hopping, 0.0015);
            (
                vec![Axis::new(ParamName::Squeezing, 0.0, 4.0, 81)],
                Some(Family {
                    name: ParamName::Gain,
                    values: vec![0.0, 0.1, 0.2],
                }),
            )
        }
        Preset::Fig5 => {
            set(&mut base, ParamName::Squeezing, 2.0);
            set(&mut base, ParamName::PumpPhase, 0.0);
            set(&mut base, ParamName::Temperature, 0.02);
            set(&mut base, ParamName::Tunneling, 0.002);
            (
                vec![
                    Axis::new(ParamName::Hopping, 0.0, 0.2, 41),
                    Axis::new(ParamName::Gain, 0.0, 0.35, 36),
                ],
                None,
            )
        }
    };
    Ok(SweepSpec {
        label: Some(which.as_str().to_string()),
        base,
        axes,
        family,
        options,
    })
}

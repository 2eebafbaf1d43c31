//! Physical inputs of the two-cavity system and the scalars derived from them.
//!
//! Everything here is stored in SI units (rad/s for rates and frequencies).
//! Unit conversion to the figure conventions (mK, multiples of Γ) happens at
//! the config/CLI boundary through [`ParamName`].

use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::constants::{self, HBAR, K_B};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Raw experimental inputs. Both cavities and both mirrors are identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Mirror mass, kg.
    pub mass: f64,
    /// Mechanical angular frequency ω_M, rad/s.
    pub omega_m: f64,
    /// Cavity angular frequency ω_c, rad/s.
    pub omega_c: f64,
    /// Drive laser angular frequency ω_l, rad/s.
    pub omega_l: f64,
    /// Cavity length, m.
    pub length: f64,
    /// Drive power, W.
    pub power: f64,
    /// Cavity damping Γ, rad/s.
    pub cavity_damping: f64,
    /// Mechanical damping γ, rad/s.
    pub mechanical_damping: f64,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Squeezing parameter r of the injected light.
    pub squeezing: f64,
    /// Parametric amplifier gain λ, rad/s.
    pub pa_gain: f64,
    /// Parametric amplifier pump phase θ, rad.
    pub pa_phase: f64,
    /// Photon hopping strength α, rad/s.
    pub hopping: f64,
    /// Phonon tunneling strength β, rad/s.
    pub tunneling: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::experimental()
    }
}

/// Non-fatal diagnostics raised by [`PhysicalParams::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParamWarning {
    /// ω_M / Γ ≤ 1: the rotating-wave approximation is not justified.
    RwaViolated { ratio: f64 },
}

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamWarning::RwaViolated { ratio } => {
                write!(f, "omega_M / Gamma = {ratio:.3} <= 1, RWA not justified")
            }
        }
    }
}

impl PhysicalParams {
    /// Experimental operating point with all coupling knobs (T, r, λ, θ, α, β) at zero.
    pub fn experimental() -> Self {
        Self {
            mass: constants::MASS,
            omega_m: constants::OMEGA_M,
            omega_c: constants::OMEGA_C,
            omega_l: constants::OMEGA_L,
            length: constants::LENGTH,
            power: constants::POWER,
            cavity_damping: constants::CAVITY_DAMPING,
            mechanical_damping: constants::MECHANICAL_DAMPING,
            temperature: 0.0,
            squeezing: 0.0,
            pa_gain: 0.0,
            pa_phase: 0.0,
            hopping: 0.0,
            tunneling: 0.0,
        }
    }

    pub fn rwa_ratio(&self) -> f64 {
        self.omega_m / self.cavity_damping
    }

    /// Checks the invariants on every field and returns any soft warnings.
    pub fn validate(&self) -> Result<Vec<ParamWarning>> {
        for name in ParamName::ALL {
            let v = self.get(name);
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
            match name.sign() {
                Sign::Positive if v <= 0.0 => {
                    return Err(invalid(name, format!("must be > 0, got {v}")));
                }
                Sign::NonNegative if v < 0.0 => {
                    return Err(invalid(name, format!("must be >= 0, got {v}")));
                }
                _ => {}
            }
        }
        let mut warnings = Vec::new();
        let ratio = self.rwa_ratio();
        if ratio <= 1.0 {
            warnings.push(ParamWarning::RwaViolated { ratio });
        }
        Ok(warnings)
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::Mass => self.mass,
            ParamName::OmegaM => self.omega_m,
            ParamName::OmegaC => self.omega_c,
            ParamName::OmegaL => self.omega_l,
            ParamName::Length => self.length,
            ParamName::Power => self.power,
            ParamName::CavityDamping => self.cavity_damping,
            ParamName::MechanicalDamping => self.mechanical_damping,
            ParamName::Temperature => self.temperature,
            ParamName::Squeezing => self.squeezing,
            ParamName::Gain => self.pa_gain,
            ParamName::PumpPhase => self.pa_phase,
            ParamName::Hopping => self.hopping,
            ParamName::Tunneling => self.tunneling,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        let slot = match name {
            ParamName::Mass => &mut self.mass,
            ParamName::OmegaM => &mut self.omega_m,
            ParamName::OmegaC => &mut self.omega_c,
            ParamName::OmegaL => &mut self.omega_l,
            ParamName::Length => &mut self.length,
            ParamName::Power => &mut self.power,
            ParamName::CavityDamping => &mut self.cavity_damping,
            ParamName::MechanicalDamping => &mut self.mechanical_damping,
            ParamName::Temperature => &mut self.temperature,
            ParamName::Squeezing => &mut self.squeezing,
            ParamName::Gain => &mut self.pa_gain,
            ParamName::PumpPhase => &mut self.pa_phase,
            ParamName::Hopping => &mut self.hopping,
            ParamName::Tunneling => &mut self.tunneling,
        };
        *slot = value;
    }

    /// Reads a field in figure units (mK, multiples of Γ, ...).
    pub fn get_display(&self, name: ParamName) -> f64 {
        name.from_si(self.get(name), self.cavity_damping)
    }

    /// Shortest decimal in figure units that converts back to the stored SI
    /// value exactly.
    pub fn get_display_shortest(&self, name: ParamName) -> f64 {
        let si = self.get(name);
        let raw = name.from_si(si, self.cavity_damping);
        (1..=17)
            .filter_map(|digits| format!("{:.*e}", digits - 1, raw).parse::<f64>().ok())
            .find(|&v| name.to_si(v, self.cavity_damping) == si)
            .unwrap_or(raw)
    }

    /// Sets a field given in figure units. Γ-relative values use the current Γ.
    pub fn set_display(&mut self, name: ParamName, value: f64) {
        let si = name.to_si(value, self.cavity_damping);
        self.set(name, si);
    }
}

fn invalid(name: ParamName, reason: String) -> Error {
    Error::InvalidParameter {
        name: name.as_str(),
        reason,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Positive,
    NonNegative,
    Any,
}

/// Field names of [`PhysicalParams`], with the unit each is shown in at the
/// user boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ParamName {
    Mass,
    OmegaM,
    OmegaC,
    OmegaL,
    Length,
    Power,
    CavityDamping,
    MechanicalDamping,
    Temperature,
    Squeezing,
    Gain,
    PumpPhase,
    Hopping,
    Tunneling,
}

impl ParamName {
    pub const ALL: [ParamName; 14] = [
        ParamName::Mass,
        ParamName::OmegaM,
        ParamName::OmegaC,
        ParamName::OmegaL,
        ParamName::Length,
        ParamName::Power,
        ParamName::CavityDamping,
        ParamName::MechanicalDamping,
        ParamName::Temperature,
        ParamName::Squeezing,
        ParamName::Gain,
        ParamName::PumpPhase,
        ParamName::Hopping,
        ParamName::Tunneling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Mass => "m",
            ParamName::OmegaM => "omega_M",
            ParamName::OmegaC => "omega_c",
            ParamName::OmegaL => "omega_l",
            ParamName::Length => "L",
            ParamName::Power => "P",
            ParamName::CavityDamping => "Gamma",
            ParamName::MechanicalDamping => "gamma",
            ParamName::Temperature => "T",
            ParamName::Squeezing => "r",
            ParamName::Gain => "lambda",
            ParamName::PumpPhase => "theta",
            ParamName::Hopping => "alpha",
            ParamName::Tunneling => "beta",
        }
    }

    /// Unit label used in CSV headers and configs.
    pub fn display_unit(self) -> &'static str {
        match self {
            ParamName::Mass => "kg",
            ParamName::Length => "m",
            ParamName::Power => "W",
            ParamName::OmegaM
            | ParamName::OmegaC
            | ParamName::OmegaL
            | ParamName::CavityDamping
            | ParamName::MechanicalDamping => "rad/s",
            ParamName::Temperature => "mK",
            ParamName::Squeezing => "1",
            ParamName::Gain | ParamName::Hopping | ParamName::Tunneling => "Gamma",
            ParamName::PumpPhase => "rad",
        }
    }

    /// Column label, e.g. `T_mK` or `lambda_Gamma`.
    pub fn column_label(self) -> String {
        match self.display_unit() {
            "1" => self.as_str().to_string(),
            "rad/s" => format!("{}_rad_per_s", self.as_str()),
            unit => format!("{}_{}", self.as_str(), unit),
        }
    }

    fn sign(self) -> Sign {
        match self {
            ParamName::Mass
            | ParamName::OmegaM
            | ParamName::OmegaC
            | ParamName::OmegaL
            | ParamName::Length
            | ParamName::CavityDamping
            | ParamName::MechanicalDamping => Sign::Positive,
            ParamName::PumpPhase => Sign::Any,
            _ => Sign::NonNegative,
        }
    }

    pub fn to_si(self, value: f64, cavity_damping: f64) -> f64 {
        match self {
            ParamName::Temperature => value * 1e-3,
            ParamName::Gain | ParamName::Hopping | ParamName::Tunneling => value * cavity_damping,
            _ => value,
        }
    }

    pub fn from_si(self, value: f64, cavity_damping: f64) -> f64 {
        match self {
            ParamName::Temperature => value * 1e3,
            ParamName::Gain | ParamName::Hopping | ParamName::Tunneling => value / cavity_damping,
            _ => value,
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<_> = ParamName::ALL.iter().map(|n| n.as_str()).collect();
                Error::ConfigParse(format!(
                    "unknown parameter name `{s}` (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

impl TryFrom<String> for ParamName {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ParamName> for String {
    fn from(n: ParamName) -> String {
        n.as_str().to_string()
    }
}

/// Which printed form of the drive phase to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseConvention {
    /// φ = −arctan[(Δ′ + α)/Γ]
    #[default]
    AsPrinted,
    /// φ = −arctan[2(Δ′ + α)/Γ]
    Doubled,
}

/// Thermal phonon occupation of a bath at temperature `temperature` (K).
///
/// Returns exactly 0 at T = 0.
pub fn thermal_occupation(temperature: f64, omega_m: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega_m / (K_B * temperature);
    1.0 / x.exp_m1()
}

/// Many-photon optomechanical coupling J, rad/s.
pub fn coupling_strength(p: &PhysicalParams) -> f64 {
    let detuned = (p.omega_m + p.hopping).powi(2) + p.cavity_damping.powi(2) / 4.0;
    let num = 2.0 * p.omega_c.powi(2) * p.cavity_damping * p.power;
    let den = p.length.powi(2) * p.mass * p.omega_m * p.omega_l * detuned;
    (num / den).sqrt()
}

/// Phase of the input laser, in (−π/2, π/2).
pub fn laser_phase(
    delta_eff: f64,
    hopping: f64,
    cavity_damping: f64,
    convention: PhaseConvention,
) -> f64 {
    let factor = match convention {
        PhaseConvention::AsPrinted => 1.0,
        PhaseConvention::Doubled => 2.0,
    };
    -(factor * (delta_eff + hopping) / cavity_damping).atan()
}

/// Squeezed-bath correlations: returns (R, V) = (sinh² r, sinh r cosh r).
pub fn squeezed_bath(r: f64) -> (f64, f64) {
    let s = r.sinh();
    (s * s, s * r.cosh())
}

/// Scalars consumed by the linearized dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub n_th: f64,
    /// J, rad/s.
    pub coupling: f64,
    /// φ, rad.
    pub phase: f64,
    /// R = sinh² r.
    pub r_corr: f64,
    /// V = sinh r cosh r.
    pub v_corr: f64,
    /// γ′ = γ(n_th + 1/2), rad/s.
    pub gamma_prime: f64,
    /// Γ′ = Γ(R + 1/2), rad/s.
    pub cavity_gamma_prime: f64,
    /// Effective detuning Δ′ = −ω_M (red sideband), rad/s.
    pub delta_eff: f64,
}

impl DerivedQuantities {
    /// Computes all derived scalars under the red-sideband condition Δ′ = −ω_M.
    pub fn new(p: &PhysicalParams, convention: PhaseConvention) -> Self {
        let n_th = thermal_occupation(p.temperature, p.omega_m);
        let (r_corr, v_corr) = squeezed_bath(p.squeezing);
        let delta_eff = -p.omega_m;
        Self {
            n_th,
            coupling: coupling_strength(p),
            phase: laser_phase(delta_eff, p.hopping, p.cavity_damping, convention),
            r_corr,
            v_corr,
            gamma_prime: p.mechanical_damping * (n_th + 0.5),
            cavity_gamma_prime: p.cavity_damping * (r_corr + 0.5),
            delta_eff,
        }
    }
}

/// Steady-state mean amplitudes of the mechanical and optical modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFields {
    /// ⟨a₁⟩, ⟨a₂⟩
    pub mechanical: [C64; 2],
    /// ⟨c₁⟩, ⟨c₂⟩
    pub optical: [C64; 2],
    /// I_j = iω_M + γ/2
    pub i_den: [C64; 2],
    /// B_j = −Γ/2 + iΔ′
    pub b_den: [C64; 2],
    /// Single-photon coupling μ = (ω_c/L)·√(ħ/(mω_M)), rad/s.
    pub single_photon_coupling: f64,
    /// Drive amplitude υ = √(2ΓP/(ħω_l)), s^(-1/2).
    pub drive_amplitude: f64,
    /// Drive phase φ.
    pub phase: f64,
    pub delta_eff: f64,
}

impl MeanFields {
    /// Bare detuning Δ = Δ′ − μ(⟨a₁⟩* + ⟨a₁⟩) implied by the imposed Δ′.
    pub fn bare_detuning(&self) -> f64 {
        self.delta_eff - 2.0 * self.single_photon_coupling * self.mechanical[0].re
    }

    /// Largest relative imbalance of the fluctuation-free steady-state
    /// equations evaluated at these amplitudes.
    pub fn fixed_point_residual(&self, p: &PhysicalParams) -> f64 {
        let i = C64::i();
        let [a1, a2] = self.mechanical;
        let [c1, c2] = self.optical;
        let mu = self.single_photon_coupling;
        let drive = self.drive_amplitude * C64::from_polar(1.0, self.phase);
        let b = C64::new(-p.cavity_damping / 2.0, self.delta_eff);
        let damp = C64::new(p.mechanical_damping / 2.0, p.omega_m);
        let mut worst: f64 = 0.0;
        for (a, an, c) in [(a1, a2, c1), (a2, a1, c2)] {
            let terms = [-damp * a, i * mu * c.norm_sqr(), i * p.tunneling * an];
            let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
            let sum: C64 = terms.iter().sum();
            if scale > 0.0 {
                worst = worst.max(sum.norm() / scale);
            }
        }
        for (c, cn) in [(c1, c2), (c2, c1)] {
            let terms = [b * c, -i * drive, i * p.hopping * cn];
            let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
            let sum: C64 = terms.iter().sum();
            if scale > 0.0 {
                worst = worst.max(sum.norm() / scale);
            }
        }
        worst
    }
}

/// Options for [`mean_fields`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldOptions {
    pub convention: PhaseConvention,
    /// Relative floor below which a closed-form denominator counts as singular.
    pub denominator_floor: f64,
}

impl Default for MeanFieldOptions {
    fn default() -> Self {
        Self {
            convention: PhaseConvention::AsPrinted,
            denominator_floor: 1e-12,
        }
    }
}

/// Closed-form mean fields for identical cavities driven at detuning `delta_eff`.
pub fn mean_fields(
    p: &PhysicalParams,
    delta_eff: f64,
    opts: &MeanFieldOptions,
) -> Result<MeanFields> {
    let i = C64::i();
    let mu = p.omega_c / p.length * (HBAR / (p.mass * p.omega_m)).sqrt();
    let upsilon = (2.0 * p.cavity_damping * p.power / (HBAR * p.omega_l)).sqrt();
    let phi = laser_phase(delta_eff, p.hopping, p.cavity_damping, opts.convention);
    let alpha = p.hopping;
    let beta = p.tunneling;

    let b = C64::new(-p.cavity_damping / 2.0, delta_eff);
    let id = C64::new(p.mechanical_damping / 2.0, p.omega_m);
    let (b1, b2) = (b, b);
    let (i1, i2) = (id, id);
    let drive = [upsilon * C64::from_polar(1.0, phi); 2];

    let opt_den = b1 * b2 + alpha * alpha;
    check_denominator(
        "B1 B2 + alpha^2",
        opt_den,
        b1.norm() * b2.norm() + alpha * alpha,
        opts,
    )?;
    let c1 = (i * b2 * drive[0] + alpha * drive[1]) / opt_den;
    let c2 = (i * b1 * drive[1] + alpha * drive[0]) / opt_den;

    let mech_den = i1 * i2 + beta * beta;
    check_denominator(
        "I1 I2 + beta^2",
        mech_den,
        i1.norm() * i2.norm() + beta * beta,
        opts,
    )?;
    let (n1, n2) = (c1.norm_sqr(), c2.norm_sqr());
    let a1 = (i * mu * i2 * n1 - beta * mu * n2) / mech_den;
    let a2 = (i * mu * i1 * n2 - beta * mu * n1) / mech_den;

    Ok(MeanFields {
        mechanical: [a1, a2],
        optical: [c1, c2],
        i_den: [i1, i2],
        b_den: [b1, b2],
        single_photon_coupling: mu,
        drive_amplitude: upsilon,
        phase: phi,
        delta_eff,
    })
}

fn check_denominator(
    which: &'static str,
    den: C64,
    scale: f64,
    opts: &MeanFieldOptions,
) -> Result<()> {
    let magnitude = den.norm();
    if !(magnitude > opts.denominator_floor * scale) {
        return Err(Error::SingularDenominator { which, magnitude });
    }
    Ok(())
}

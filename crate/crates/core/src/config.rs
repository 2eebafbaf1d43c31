//! TOML run configuration: `[params]` in figure units, `[sweep]`, `[numerics]`.
//!
//! Layers are applied in order (defaults or preset, then the config file,
//! then `--set` overrides). Every layer is merged into the previous one as a
//! TOML tree and the result is deserialized strictly, so unknown keys are
//! errors at every layer.

use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use toml::Value;

use crate::error::{Error, Result};
use crate::model::ModelOptions;
use crate::params::{ParamName, PhaseConvention, PhysicalParams};
use crate::sweep::{Axis, Family, SweepSpec, ThresholdKind};

/// Physical parameters as written by the user, in figure units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamsSection {
    values: [f64; 14],
}

impl ParamsSection {
    pub fn get(&self, name: ParamName) -> f64 {
        self.values[index(name)]
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        self.values[index(name)] = value;
    }

    /// Converts to SI. Γ-relative entries use this section's Γ.
    pub fn to_physical(&self) -> PhysicalParams {
        let mut p = PhysicalParams::experimental();
        p.set(ParamName::CavityDamping, self.get(ParamName::CavityDamping));
        for name in ParamName::ALL {
            p.set_display(name, self.get(name));
        }
        p
    }

    /// Figure-unit view of `p`, using for each entry the shortest decimal
    /// that converts back to the same SI value.
    pub fn from_physical(p: &PhysicalParams) -> Self {
        let mut values = [0.0; 14];
        for name in ParamName::ALL {
            values[index(name)] = p.get_display_shortest(name);
        }
        Self { values }
    }
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self::from_physical(&PhysicalParams::experimental())
    }
}

fn index(name: ParamName) -> usize {
    ParamName::ALL
        .iter()
        .position(|&n| n == name)
        .expect("listed")
}

/// Parses `"0.2 mK"`, `"0.2Γ"`, `"0.2 Gamma"` or a bare number string.
fn parse_quantity(name: ParamName, text: &str) -> std::result::Result<f64, String> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("`{name}`: cannot read a number from `{text}`"))?;
    let unit = unit.trim();
    let expected = name.display_unit();
    let ok = unit.is_empty() || unit == expected || (expected == "Gamma" && unit == "Γ");
    if !ok {
        return Err(format!(
            "`{name}`: unit mismatch, expected `{expected}`, got `{unit}`"
        ));
    }
    Ok(value)
}

impl Serialize for ParamsSection {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(14))?;
        for name in ParamName::ALL {
            map.serialize_entry(name.as_str(), &self.get(name))?;
        }
        map.end()
    }
}

struct ParamsVisitor;

#[derive(Deserialize)]
#[serde(untagged)]
enum RawQuantity {
    Number(f64),
    Text(String),
}

impl<'de> Visitor<'de> for ParamsVisitor {
    type Value = ParamsSection;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a table of parameter values")
    }

    fn visit_map<A: MapAccess<'de>>(
        self,
        mut map: A,
    ) -> std::result::Result<ParamsSection, A::Error> {
        let mut out = ParamsSection::default();
        while let Some(key) = map.next_key::<String>()? {
            let name: ParamName = key.parse().map_err(|e: Error| match e {
                Error::ConfigParse(m) => de::Error::custom(m),
                other => de::Error::custom(other.to_string()),
            })?;
            let value = match map.next_value::<RawQuantity>()? {
                RawQuantity::Number(v) => v,
                RawQuantity::Text(t) => parse_quantity(name, &t).map_err(de::Error::custom)?,
            };
            out.set(name, value);
        }
        Ok(out)
    }
}

impl<'de> Deserialize<'de> for ParamsSection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_map(ParamsVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub kind: ThresholdKind,
    /// In axis units.
    pub resolution: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self {
            kind: ThresholdKind::Death,
            resolution: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default)]
    pub threshold: ThresholdSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub phase_convention: PhaseConvention,
    /// Stability margin in units of Γ.
    pub stability_margin: f64,
    pub condition_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let m = ModelOptions::default();
        Self {
            phase_convention: m.phase_convention,
            stability_margin: 0.0,
            condition_bound: m.condition_bound,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub numerics: NumericsSection,
}

impl Config {
    pub fn from_spec(spec: &SweepSpec) -> Self {
        let params = ParamsSection::from_physical(&spec.base);
        let gamma = spec.base.cavity_damping;
        let margin = spec.options.stability_margin / gamma;
        let margin = (1..=17)
            .filter_map(|d| format!("{:.*e}", d - 1, margin).parse::<f64>().ok())
            .find(|&v| v * gamma == spec.options.stability_margin)
            .unwrap_or(margin);
        Self {
            params,
            sweep: SweepSection {
                label: spec.label.clone(),
                axes: spec.axes.clone(),
                family: spec.family.clone(),
                threshold: ThresholdSection::default(),
            },
            numerics: NumericsSection {
                phase_convention: spec.options.phase_convention,
                stability_margin: margin,
                condition_bound: spec.options.condition_bound,
                jobs: None,
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Merges a (partial) TOML document on top of this configuration.
    pub fn merge_toml(&self, text: &str) -> Result<Self> {
        let overlay: Value = text
            .parse::<toml::Table>()
            .map(Value::Table)
            .map_err(|e| Error::ConfigParse(e.message().to_string()))?;
        let mut tree = self.to_value()?;
        merge(&mut tree, overlay);
        Self::from_value(tree)
    }

    /// Applies `dotted.key=value` overrides. Every segment but the last must
    /// already exist; array elements are addressed by index.
    pub fn apply_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut tree = self.to_value()?;
        for item in overrides {
            let item = item.as_ref();
            let (path, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::ConfigParse(format!("override `{item}` is not key=value")))?;
            let value = parse_override_value(raw.trim());
            set_path(&mut tree, path.trim(), value)?;
        }
        Self::from_value(tree)
    }

    pub fn model_options(&self) -> ModelOptions {
        let gamma = self.params.get(ParamName::CavityDamping);
        ModelOptions {
            phase_convention: self.numerics.phase_convention,
            stability_margin: self.numerics.stability_margin * gamma,
            condition_bound: self.numerics.condition_bound,
        }
    }

    pub fn to_spec(&self) -> SweepSpec {
        SweepSpec {
            label: self.sweep.label.clone(),
            base: self.params.to_physical(),
            axes: self.sweep.axes.clone(),
            family: self.sweep.family.clone(),
            options: self.model_options(),
        }
    }

    fn to_value(&self) -> Result<Value> {
        Value::try_from(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    fn from_value(v: Value) -> Result<Self> {
        v.try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.message().to_string()))
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn parse_override_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(tree: &mut Value, path: &str, value: Value) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::ConfigParse(format!(
            "malformed override key `{path}`"
        )));
    }
    let unknown = || Error::ConfigParse(format!("override references unknown key `{path}`"));
    let mut node = tree;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        node = match node {
            Value::Table(t) => {
                if last && !t.contains_key(*seg) {
                    // Optional keys are absent until set; strict parsing rejects
                    // names outside the schema.
                    t.insert(seg.to_string(), value);
                    return Ok(());
                }
                t.get_mut(*seg).ok_or_else(unknown)?
            }
            Value::Array(a) => {
                let idx: usize = seg.parse().map_err(|_| unknown())?;
                a.get_mut(idx).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    *node = value;
    Ok(())
}

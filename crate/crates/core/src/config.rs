//! JSON run configuration, named presets and dotted-path overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classical::ExtractionSettings;
use crate::error::{Error, Result};
use crate::evolution::{EvolutionSettings, InitialState, StationarySettings, TrefPolicy};
use crate::fock::{coherent_required_dim, DEFAULT_LEAKAGE_THRESHOLD};
use crate::liouvillian::{DriveModel, Frame};
use crate::params::{table_entry, GainSetting, SystemParams, TABLE};
use crate::spectrum::{CorrelationSettings, FrequencyGrid, Normalization};
use crate::sweep::{axis, SweepObservable};
use crate::wigner::PolarGrid;

/// Which state the Wigner export is taken from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WignerSource {
    /// Ω = 0 steady state.
    #[default]
    Steady,
    /// State of the configured evolution at time `t`.
    Time { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerOptions {
    pub source: WignerSource,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
    /// Polar grid for the maximum; `None` derives it from the limit-cycle amplitude.
    pub polar: Option<PolarGrid>,
    pub phase_bins: usize,
    /// Points of the classical limit-cycle overlay (0 disables it).
    pub overlay_points: usize,
}

impl Default for WignerOptions {
    fn default() -> Self {
        Self {
            source: WignerSource::Steady,
            x_min: -6.0,
            x_max: 6.0,
            n_x: 121,
            p_min: -6.0,
            p_max: 6.0,
            n_p: 121,
            polar: None,
            phase_bins: 256,
            overlay_points: 512,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub delta_axis: Vec<f64>,
    pub omega_axis: Vec<f64>,
    pub observables: Vec<SweepObservable>,
    pub checkpoint_every: usize,
    /// Presets swept one after another; empty means the configuration itself.
    pub sets: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            delta_axis: axis(-0.3, 0.3, 21),
            omega_axis: axis(0.0, 0.6, 21),
            observables: vec![SweepObservable::SQ, SweepObservable::Number],
            checkpoint_every: 16,
            sets: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumOptions {
    pub correlation: CorrelationSettings,
    pub grid: FrequencyGrid,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalOptions {
    pub extraction: ExtractionSettings,
}

/// Complete description of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub params: SystemParams,
    pub dim: usize,
    #[serde(default)]
    pub drive: DriveModel,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default = "default_evolution")]
    pub evolve: EvolutionSettings,
    #[serde(default)]
    pub stationary: StationarySettings,
    #[serde(default)]
    pub wigner: WignerOptions,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub spectrum: SpectrumOptions,
    #[serde(default)]
    pub classical: ClassicalOptions,
}

fn default_evolution() -> EvolutionSettings {
    EvolutionSettings {
        t_final: 50.0,
        record_interval: 2.0 * std::f64::consts::PI / 64.0,
        snapshot_times: Vec::new(),
        accuracy: Default::default(),
    }
}

impl RunConfig {
    pub fn new(params: SystemParams, dim: usize) -> Self {
        Self {
            name: None,
            params,
            dim,
            drive: DriveModel::Rwa,
            frame: Frame::Laboratory,
            initial: InitialState::default(),
            evolve: default_evolution(),
            stationary: StationarySettings::default(),
            wigner: WignerOptions::default(),
            sweep: SweepSection::default(),
            spectrum: SpectrumOptions::default(),
            classical: ClassicalOptions::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.dim < 2 {
            return Err(Error::Config(format!("dim must be at least 2, got {}", self.dim)));
        }
        if !(self.evolve.t_final > 0.0 && self.evolve.record_interval > 0.0) {
            return Err(Error::Config("evolve.t_final and evolve.record_interval must be positive".into()));
        }
        let w = &self.wigner;
        if w.n_x == 0 || w.n_p == 0 || !(w.x_max > w.x_min) || !(w.p_max > w.p_min) {
            return Err(Error::Config("wigner grid must have positive extent and sample counts".into()));
        }
        Ok(())
    }

    /// Applies `key=value` where `key` is a dotted path into the JSON form and
    /// `value` is JSON (bare words are taken as strings).
    pub fn with_override(&self, assignment: &str) -> Result<Self> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not KEY=VALUE")))?;
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut tree = serde_json::to_value(self)?;
        let mut node = &mut tree;
        let parts: Vec<&str> = key.split('.').collect();
        for (depth, part) in parts.iter().enumerate() {
            let last = depth + 1 == parts.len();
            node = match node {
                Value::Object(map) => {
                    if last {
                        map.insert(part.to_string(), value.clone());
                        break;
                    }
                    let child = map.entry(part.to_string()).or_insert(Value::Null);
                    if child.is_null() {
                        *child = Value::Object(Default::default());
                    }
                    child
                }
                Value::Array(items) => {
                    let idx: usize = part
                        .parse()
                        .map_err(|_| Error::Config(format!("override key '{key}': '{part}' is not an index")))?;
                    let len = items.len();
                    let slot = items
                        .get_mut(idx)
                        .ok_or_else(|| Error::Config(format!("override key '{key}': index {idx} out of {len}")))?;
                    if last {
                        *slot = value.clone();
                        break;
                    }
                    slot
                }
                _ => return Err(Error::Config(format!("override key '{key}': '{part}' is not a container"))),
            };
        }
        let cfg: Self = serde_json::from_value(tree).map_err(|e| Error::Config(format!("override '{key}': {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Coherent start with x₀ = p₀ = 3/(2√2).
fn coherent_start() -> InitialState {
    InitialState::default()
}

/// Dimension covering both the undriven steady state of the set and the
/// default coherent start at the default leakage threshold.
fn preset_dim(table_dim: usize) -> usize {
    let r = 0.75 * std::f64::consts::SQRT_2;
    table_dim.max(coherent_required_dim(r, DEFAULT_LEAKAGE_THRESHOLD))
}

fn table_preset(label: char, gain: GainSetting) -> RunConfig {
    let e = table_entry(label).expect("label in table");
    let mut cfg = RunConfig::new(e.params(gain).with_drive(0.3), preset_dim(e.default_dim(gain)));
    cfg.name = Some(e.preset_name(gain));
    cfg.initial = coherent_start();
    cfg
}

fn figure_presets() -> Vec<RunConfig> {
    let mut out = Vec::new();
    for (name, label) in [("fig2a", 'k'), ("fig2b", 'm'), ("fig2c", 'o')] {
        let mut cfg = table_preset(label, GainSetting::Eps0p1);
        cfg.name = Some(name.into());
        cfg.evolve.t_final = 60.0;
        out.push(cfg);
    }
    let mut row3 = table_preset('m', GainSetting::Eps0p1);
    row3.name = Some("fig3-row3".into());
    row3.sweep.sets = ['k', 'l', 'm', 'n', 'o']
        .iter()
        .map(|&l| table_entry(l).expect("label").preset_name(GainSetting::Eps0p1))
        .collect();
    out.push(row3);
    let mut fig7 = table_preset('m', GainSetting::Eps0p1);
    fig7.name = Some("fig7-quantum-RvdP".into());
    fig7.frame = Frame::Rotating { omega_r: fig7.params.omega_d };
    fig7.stationary.policy = TrefPolicy::LastPeriod;
    out.push(fig7);
    out
}

/// All named presets: every table set at both gain settings plus figure presets.
pub fn presets() -> Vec<RunConfig> {
    let mut out = Vec::new();
    for gain in [GainSetting::Eps0p2, GainSetting::Eps0p1] {
        for e in TABLE.iter() {
            out.push(table_preset(e.label, gain));
        }
    }
    out.extend(figure_presets());
    out
}

pub fn preset(name: &str) -> Result<RunConfig> {
    presets()
        .into_iter()
        .find(|c| c.name.as_deref() == Some(name))
        .ok_or_else(|| Error::Config(format!("unknown preset '{name}'; see presets-list")))
}

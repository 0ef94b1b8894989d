//! Declarative run configuration: a strict TOML document mirroring the
//! experiment parameters, with dotted-key command-line overrides and a
//! content digest that every emitted artifact embeds. A JSON document written
//! by a previous command can be loaded in place of a TOML file to reproduce
//! that command exactly.

use std::path::{Path, PathBuf};

use optocorr::estimators::AccumulationMode;
use optocorr::physics::{BeamConfig, ExperimentParams, MechanicalOscillator, OpticalCavity};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorSection {
    pub resonance_freq_hz: f64,
    pub mass_kg: f64,
    pub quality_factor: f64,
}

impl Default for OscillatorSection {
    fn default() -> Self {
        Self { resonance_freq_hz: 1.125e6, mass_kg: 500e-6, quality_factor: 5e5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub finesse: f64,
    pub wavelength_m: f64,
    pub bandwidth_hz: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self { finesse: 330_000.0, wavelength_m: 810e-9, bandwidth_hz: 700e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamsSection {
    pub signal_power_w: f64,
    pub meter_power_w: f64,
    /// Meter displacement sensitivity floor, m/sqrt(Hz).
    pub shot_noise_floor: f64,
}

impl Default for BeamsSection {
    fn default() -> Self {
        Self { signal_power_w: 150e-6, meter_power_w: 500e-6, shot_noise_floor: 2.7e-20 }
    }
}

/// The full declarative configuration. Unknown keys are rejected; omitted
/// keys fall back to the reference setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub oscillator: OscillatorSection,
    pub cavity: CavitySection,
    pub beams: BeamsSection,
    pub temperature_k: f64,
    pub center_freq_hz: f64,
    pub analysis_bandwidth_hz: f64,
    pub run_duration_s: f64,
    pub drive_ratio: f64,
    pub seed: u64,
    /// Envelope sample rate; defaults to 10x the analysis bandwidth.
    pub sample_rate_hz: Option<f64>,
    /// Drive noise bandwidth; defaults to 1.5x the analysis bandwidth.
    pub drive_bandwidth_hz: Option<f64>,
    /// Output root; overridden by --out and the OPTOCORR_OUT variable.
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            oscillator: OscillatorSection::default(),
            cavity: CavitySection::default(),
            beams: BeamsSection::default(),
            temperature_k: 300.0,
            center_freq_hz: 1.123e6,
            analysis_bandwidth_hz: 400.0,
            run_duration_s: 0.2,
            drive_ratio: 25.0,
            seed: 0,
            sample_rate_hz: None,
            drive_bandwidth_hz: None,
            out_dir: None,
        }
    }
}

impl RunConfig {
    /// Resolve the optional rates and validate into experiment parameters.
    pub fn to_params(&self) -> Result<ExperimentParams, CliError> {
        let bw = self.analysis_bandwidth_hz;
        let params = ExperimentParams {
            oscillator: MechanicalOscillator {
                resonance_freq: self.oscillator.resonance_freq_hz,
                mass: self.oscillator.mass_kg,
                quality_factor: self.oscillator.quality_factor,
            },
            cavity: OpticalCavity {
                finesse: self.cavity.finesse,
                wavelength: self.cavity.wavelength_m,
                bandwidth_freq: self.cavity.bandwidth_hz,
            },
            beams: BeamConfig {
                signal_power: self.beams.signal_power_w,
                meter_power: self.beams.meter_power_w,
                shot_noise_floor: self.beams.shot_noise_floor,
            },
            temperature: self.temperature_k,
            center_freq: self.center_freq_hz,
            analysis_bandwidth: bw,
            run_duration: self.run_duration_s,
            drive_ratio: self.drive_ratio,
            seed: self.seed,
            sample_rate: self.sample_rate_hz.unwrap_or(10.0 * bw),
            drive_bandwidth: self.drive_bandwidth_hz.unwrap_or(1.5 * bw),
        };
        params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }

    /// Hex SHA-256 of the canonical JSON form; embedded in every artifact.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Producer information embedded in emitted JSON documents, sufficient to
/// re-run the command that wrote them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandInfo {
    pub subcommand: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<AccumulationMode>,
}

/// A configuration plus, when loaded from a previously emitted document, the
/// stored command parameters.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub rerun: Option<CommandInfo>,
}

/// Load the configuration: none (defaults), a TOML file, or a JSON document
/// written by a previous command (its embedded config and command parameters
/// are restored). `overrides` are `key=value` pairs with dotted paths.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<LoadedConfig, CliError> {
    let (mut table, rerun) = match path {
        None => (toml::Table::new(), None),
        Some(p) if p.extension().is_some_and(|e| e == "json") => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let doc: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let command = doc.get("command").cloned().ok_or_else(|| {
                CliError::Config(format!(
                    "{}: no embedded command block to re-run from",
                    p.display()
                ))
            })?;
            let info: CommandInfo = serde_json::from_value(command)
                .map_err(|e| CliError::Config(format!("{}: bad command block: {e}", p.display())))?;
            let table = to_toml_table(&info.config)?;
            (table, Some(info))
        }
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let table = text
                .parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            (table, None)
        }
    };

    for pair in overrides {
        apply_override(&mut table, pair)?;
    }

    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(e.to_string()))?;
    if config.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {}, expected {CONFIG_SCHEMA_VERSION}",
            config.schema_version
        )));
    }
    Ok(LoadedConfig { config, rerun })
}

fn to_toml_table(config: &RunConfig) -> Result<toml::Table, CliError> {
    let value = toml::Value::try_from(config).map_err(|e| CliError::Config(e.to_string()))?;
    match value {
        toml::Value::Table(t) => Ok(t),
        _ => Err(CliError::Config("config did not serialize to a table".into())),
    }
}

/// Set one dotted key, creating intermediate tables. The value is parsed as
/// a TOML literal, falling back to a string.
fn apply_override(table: &mut toml::Table, pair: &str) -> Result<(), CliError> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {pair:?} is not KEY=VALUE")))?;
    let value = parse_toml_value(raw.trim());

    let mut current = table;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key {key:?} has empty segments")));
    }
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("key {part:?} is not a table")))?;
    }
    current.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_toml_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

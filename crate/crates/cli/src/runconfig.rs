//! Run configuration: the single file that pins a whole synthesis run.

use std::env;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ftind_core::calibration::axis_spans;
use ftind_core::coil::{count_scale, total_inductance, CoilGeometry, DEFAULT_FULL_SCALE_COUNTS};
use ftind_core::config::{geometry_preset, load_geometry, sha256_hex};
use ftind_core::synth::{
    ChannelModel, PlateKinematics, SensorModel, DEFAULT_COUPLING_SCALE,
};

use crate::error::{CliError, CliResult};

/// Environment variable holding an extra directory searched for config,
/// geometry, and kinematics files referenced by relative path.
pub const CONFIG_DIR_ENV: &str = "FTIND_CONFIG_DIR";

/// Noise injected during synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-sample Gaussian noise on raw counts (standard deviation).
    pub count_sigma: f64,
    /// Linear count drift applied to every channel, counts per second.
    pub drift_per_second: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { count_sigma: 3.0, drift_per_second: 0.0 }
    }
}

/// Shape of the default calibration excitation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Unloaded hold before the sweeps, seconds.
    pub unloaded_seconds: f64,
    /// Duration of each per-axis triangle sweep, seconds.
    pub per_axis_seconds: f64,
    /// Sweep peak as a fraction of each axis limit (half the axis span).
    pub peak_fraction: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { unloaded_seconds: 0.4, per_axis_seconds: 1.2, peak_fraction: 0.8 }
    }
}

/// Everything a synthesis run depends on. Two runs with equal configs and
/// seeds produce byte-identical outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// RNG seed for noise draws.
    pub seed: u64,
    /// Sample rate in Hz.
    pub rate_hz: f64,
    /// Coil for channels 0–2: a preset name or a geometry file path.
    pub vertical_coil: String,
    /// Coil for channels 3–5: a preset name or a geometry file path.
    pub horizontal_coil: String,
    /// Image coupling strength β shared by all channels.
    pub coupling_scale: f64,
    /// Optional plate kinematics file (JSON); default is the decoupled
    /// reference suspension.
    pub kinematics: Option<String>,
    pub noise: NoiseConfig,
    /// Per-axis full-scale spans [fx, fy, fz, tx, ty, tz] in N and N·m.
    pub ranges: [f64; 6],
    pub schedule: ScheduleConfig,
    /// Resolution criterion multiplier k in k·σ.
    pub sigma_multiplier: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            rate_hz: 500.0,
            vertical_coil: "vertical_coil".into(),
            horizontal_coil: "horizontal_coil".into(),
            coupling_scale: DEFAULT_COUPLING_SCALE,
            kinematics: None,
            noise: NoiseConfig::default(),
            ranges: axis_spans(),
            schedule: ScheduleConfig::default(),
            sigma_multiplier: 3.0,
        }
    }
}

/// Resolves a file reference: as given, then under `$FTIND_CONFIG_DIR`, then
/// under `./configs`.
pub fn resolve_path(name: &str) -> CliResult<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    if direct.is_relative() {
        if let Ok(dir) = env::var(CONFIG_DIR_ENV) {
            let p = Path::new(&dir).join(name);
            if p.is_file() {
                return Ok(p);
            }
        }
        let p = Path::new("configs").join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(CliError::Config(format!(
        "file '{name}' not found (searched the path itself, ${CONFIG_DIR_ENV}, and ./configs)"
    )))
}

/// Loads a run config from TOML or JSON (by extension); `None` gives the
/// built-in default.
pub fn load_run_config(path: Option<&str>) -> CliResult<RunConfig> {
    let Some(name) = path else {
        return Ok(RunConfig::default());
    };
    let path = resolve_path(name)?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("");
    let cfg: RunConfig = match ext.to_ascii_lowercase().as_str() {
        "json" => serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        "toml" => toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        other => {
            return Err(CliError::Config(format!(
                "unsupported config extension '{other}' (expected .toml or .json)"
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.rate_hz > 0.0) {
            return Err(CliError::Config(format!("rate_hz must be > 0, got {}", self.rate_hz)));
        }
        if !self.ranges.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(CliError::Config(format!("ranges must be positive: {:?}", self.ranges)));
        }
        if !(self.sigma_multiplier > 0.0) {
            return Err(CliError::Config(format!(
                "sigma_multiplier must be > 0, got {}",
                self.sigma_multiplier
            )));
        }
        Ok(())
    }

    /// Resolves a coil reference: preset name first, then geometry file.
    pub fn load_coil(&self, reference: &str) -> CliResult<CoilGeometry> {
        if let Some(g) = geometry_preset(reference) {
            return Ok(g);
        }
        let path = resolve_path(reference)?;
        load_geometry(&path).map_err(CliError::config)
    }

    /// Builds the forward model this config describes: the configured coils
    /// on channels 0–2 / 3–5, each converter anchored so the coil's
    /// free-space inductance reads full scale.
    pub fn build_model(&self) -> CliResult<SensorModel> {
        let vertical = self.load_coil(&self.vertical_coil)?;
        let horizontal = self.load_coil(&self.horizontal_coil)?;
        let kinematics = match &self.kinematics {
            None => PlateKinematics::default_decoupled(),
            Some(name) => {
                let path = resolve_path(name)?;
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
        };
        let mut channels = Vec::with_capacity(6);
        for i in 0..6 {
            let geometry = if i < 3 { vertical.clone() } else { horizontal.clone() };
            let anchor = total_inductance(&geometry).map_err(CliError::config)?;
            channels.push(ChannelModel {
                geometry,
                coupling_scale: self.coupling_scale,
                count_scale: count_scale(anchor, DEFAULT_FULL_SCALE_COUNTS)
                    .map_err(CliError::config)?,
            });
        }
        let model = SensorModel { kinematics, channels };
        model.validate().map_err(CliError::config)?;
        Ok(model)
    }

    /// Canonical hash of the resolved forward model, used to tie calibration
    /// files to the sensor they were fitted for.
    pub fn model_hash(&self) -> CliResult<String> {
        let model = self.build_model()?;
        let bytes = serde_json::to_vec(&model).map_err(CliError::config)?;
        Ok(sha256_hex(&bytes))
    }
}

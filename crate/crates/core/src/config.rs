//! TOML run configuration.
//!
//! Relative paths are resolved against the directory holding the config
//! file. See `config/example.toml` at the repository root for every key.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::crop::{CropParams, SoilParams};
use crate::error::{Error, Result};
use crate::optimizer::{DecisionVector, OptimizerConfig, SweepVariable, AZIMUTH_BOUNDS, DISTANCE_BOUNDS};
use crate::pipeline::{ModelSettings, PlantSpec};
use crate::pv::{ArrayConfig, ModuleDatasheet};
use crate::shading::SceneConfig;
use crate::solar::Site;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub weather: PathBuf,
    /// Flat horizon when omitted.
    #[serde(default)]
    pub horizon: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropConfig {
    pub preset: String,
    /// Field-by-field replacements of the preset.
    #[serde(default)]
    pub overrides: toml::Table,
}

impl CropConfig {
    pub fn resolve(&self) -> Result<CropParams> {
        let preset = CropParams::preset(&self.preset)?;
        if self.overrides.is_empty() {
            return Ok(preset);
        }
        let mut table = toml::Table::try_from(&preset)
            .map_err(|e| Error::Config(format!("crop preset not serializable: {e}")))?;
        for (k, v) in &self.overrides {
            table.insert(k.clone(), v.clone());
        }
        table
            .try_into()
            .map_err(|e| Error::Config(format!("crop.overrides: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_variable")]
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Crop presets; the configured crop replaces its own preset.
    #[serde(default = "default_sweep_crops")]
    pub crops: Vec<String>,
}

fn default_sweep_variable() -> SweepVariable {
    SweepVariable::Distance
}

fn default_sweep_crops() -> Vec<String> {
    vec!["oat".into(), "potato".into()]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Distance,
            start: DISTANCE_BOUNDS.0,
            stop: DISTANCE_BOUNDS.1,
            step: 1.0,
            crops: default_sweep_crops(),
        }
    }
}

impl SweepConfig {
    /// Sweep values from start to stop inclusive.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(Error::Config(format!(
                "sweep range {}..{} step {} is empty or invalid",
                self.start, self.stop, self.step
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        if n > 10_000 {
            return Err(Error::Config(format!("sweep has {n} values; at most 10000 allowed")));
        }
        let (lo, hi) = match self.variable {
            SweepVariable::Azimuth => AZIMUTH_BOUNDS,
            SweepVariable::Distance => DISTANCE_BOUNDS,
        };
        let values: Vec<f64> = (0..n).map(|k| self.start + k as f64 * self.step).collect();
        if values.iter().any(|v| *v < lo || *v > hi) {
            return Err(Error::Config(format!("sweep values must lie in [{lo}, {hi}]")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    paths: PathsConfig,
    site: Site,
    #[serde(default)]
    scene: SceneConfig,
    #[serde(default)]
    module: ModuleDatasheet,
    #[serde(default)]
    array: ArrayConfig,
    #[serde(default)]
    soil: SoilParams,
    #[serde(default)]
    model: ModelSettings,
    crop: CropConfig,
    design: DecisionVector,
    #[serde(default)]
    optimizer: OptimizerConfig,
    #[serde(default)]
    sweep: SweepConfig,
}

/// Fully resolved and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub weather: PathBuf,
    pub horizon: Option<PathBuf>,
    pub output: PathBuf,
    pub site: Site,
    pub plant: PlantSpec,
    pub crop: CropParams,
    pub design: DecisionVector,
    pub optimizer: OptimizerConfig,
    pub sweep: SweepConfig,
    /// Hex SHA-256 of the config file bytes.
    pub hash: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::parse(&text, base)?;
        cfg.hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        Ok(cfg)
    }

    /// Parses and validates config text; relative paths are joined to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        if let Some(scene) = value.get("scene").and_then(|s| s.as_table()) {
            for key in ["panel_azimuth", "row_distance"] {
                if scene.contains_key(key) {
                    return Err(Error::Config(format!("scene.{key} is a design variable; set it in [design]")));
                }
            }
        }
        let raw: RawConfig = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let design = raw.design;
        let cfg = Self {
            weather: resolve(&raw.paths.weather),
            horizon: raw.paths.horizon.as_deref().map(resolve),
            output: resolve(&raw.paths.output),
            site: raw.site,
            plant: PlantSpec {
                scene: raw.scene.with_design(design.azimuth, design.row_distance),
                module: raw.module,
                array: raw.array,
                soil: raw.soil,
                model: raw.model,
            },
            crop: raw.crop.resolve()?,
            design,
            optimizer: raw.optimizer,
            sweep: raw.sweep,
            hash: String::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every block and that the input files exist.
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.site.latitude) || !(-180.0..=180.0).contains(&self.site.longitude) {
            return Err(Error::Config(format!(
                "site ({}, {}) outside latitude/longitude range",
                self.site.latitude, self.site.longitude
            )));
        }
        self.plant.validate()?;
        self.crop.validate()?;
        self.design.validate()?;
        self.optimizer.validate()?;
        self.sweep.values()?;
        self.sweep_crops()?;
        for p in std::iter::once(&self.weather).chain(self.horizon.as_ref()) {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn sweep_crops(&self) -> Result<Vec<CropParams>> {
        if self.sweep.crops.is_empty() {
            return Err(Error::Config("sweep.crops must not be empty".into()));
        }
        self.sweep
            .crops
            .iter()
            .map(|name| {
                if name.eq_ignore_ascii_case(&self.crop.name) {
                    Ok(self.crop.clone())
                } else {
                    CropParams::preset(name)
                }
            })
            .collect()
    }

    /// First line of every output file.
    pub fn header(&self, seed: u64) -> String {
        format!(
            "# agrivoltaic {} config_hash={} seed={seed}",
            env!("CARGO_PKG_VERSION"),
            &self.hash[..self.hash.len().min(16)]
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[paths]
weather = "weather.csv"
[site]
latitude = 59.55
longitude = 16.76
[crop]
preset = "oat"
[design]
azimuth = -90.0
row_distance = 10.0
"#;

    fn dir_with_weather() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("weather.csv"), "time,ghi,t_air\n").unwrap();
        dir
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let dir = dir_with_weather();
        let cfg = RunConfig::parse(MINIMAL, dir.path()).unwrap();
        assert_eq!(cfg.output, dir.path().join("out"));
        assert_eq!(cfg.plant.scene.row_distance, 10.0);
        assert_eq!(cfg.optimizer, OptimizerConfig::default());
        assert_eq!(cfg.sweep.values().unwrap().len(), 16);
        assert_eq!(cfg.crop, CropParams::oat());
    }

    #[test]
    fn overrides_replace_preset_fields() {
        let dir = dir_with_weather();
        let text = format!("{MINIMAL}[crop.overrides]\npotential_heat_units = 1400.0\nsowing = \"04-20\"\n");
        let cfg = RunConfig::parse(&text, dir.path()).unwrap();
        assert_eq!(cfg.crop.potential_heat_units, 1400.0);
        assert_eq!(cfg.crop.sowing.to_string(), "04-20");
        let bad = format!("{MINIMAL}[crop.overrides]\nharvest_indx = 0.4\n");
        assert!(matches!(RunConfig::parse(&bad, dir.path()), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let dir = dir_with_weather();
        let cases = [
            MINIMAL.replace("row_distance = 10.0", "row_distance = 25.0"),
            MINIMAL.replace("preset = \"oat\"", "preset = \"wheat\""),
            format!("{MINIMAL}[optimizer]\npopulation = 7\n"),
            format!("{MINIMAL}[scene]\nrow_distance = 7.0\n"),
            format!("{MINIMAL}[module]\np_mp = -1.0\n"),
            format!("{MINIMAL}[sweep]\nstart = 20.0\nstop = 5.0\nstep = 1.0\n"),
            format!("{MINIMAL}[unknown]\nx = 1\n"),
            MINIMAL.replace("weather.csv", "missing.csv"),
            "not toml = = 1".to_string(),
        ];
        for text in cases {
            let err = RunConfig::parse(&text, dir.path()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn header_records_hash_and_seed() {
        let dir = dir_with_weather();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        let h = cfg.header(7);
        assert!(h.starts_with("# agrivoltaic "));
        assert!(h.contains(&format!("config_hash={}", &cfg.hash[..16])));
        assert!(h.ends_with("seed=7"));
    }

    #[test]
    fn bundled_example_is_valid() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/example.toml");
        let cfg = RunConfig::load(&root).unwrap();
        assert_eq!(cfg.design, DecisionVector { azimuth: -90.0, row_distance: 10.0 });
    }
}

//! Toolkit configuration. Files use kPa, mm and degrees; everything is
//! converted to SI on load.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::design::{DesignConstraints, DesignConstraintsFile};
use crate::emg::FilterSpec;
use crate::error::{Error, Result};
use crate::pneumatic::{Chamber, ValveModel, DEFAULT_DT, T_STANDARD};
use crate::torque::ActuatorGeometry;
use crate::units;

/// Configuration of the built knee exosuit, shipped with the crate.
pub const KNEE_DEFAULT_JSON: &str = include_str!("../configs/knee_default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub n: u32,
    pub d_mm: f64,
    pub l_dz_mm: f64,
    #[serde(default)]
    pub l_hold_upper_mm: f64,
    #[serde(default)]
    pub l_hold_lower_mm: f64,
}

impl From<&GeometryFile> for ActuatorGeometry {
    fn from(g: &GeometryFile) -> Self {
        ActuatorGeometry {
            n: g.n,
            d: units::mm_to_m(g.d_mm),
            l_dz: units::mm_to_m(g.l_dz_mm),
            l_hold_upper: units::mm_to_m(g.l_hold_upper_mm),
            l_hold_lower: units::mm_to_m(g.l_hold_lower_mm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantFile {
    /// Chamber volume; derived from the geometry when absent.
    #[serde(default)]
    pub volume_m3: Option<f64>,
    #[serde(default = "default_temperature")]
    pub temperature_k: f64,
    pub valve: ValveModel,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    pub t_max_s: f64,
    /// Measured fill used to calibrate the valve conductance.
    pub anchor_target_kpa: f64,
    pub anchor_time_s: f64,
}

fn default_temperature() -> f64 {
    T_STANDARD
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerFile {
    pub assist_pressure_kpa: f64,
    pub hold_pressure_kpa: f64,
    pub stand_onset_deg: f64,
    pub stand_complete_deg: f64,
    pub debounce_s: f64,
    pub vent_time_s: f64,
}

impl From<&ControllerFile> for ControllerConfig {
    fn from(c: &ControllerFile) -> Self {
        ControllerConfig {
            assist_pressure: units::kpa_to_pa(c.assist_pressure_kpa),
            hold_pressure: units::kpa_to_pa(c.hold_pressure_kpa),
            stand_onset_angle: units::deg_to_rad(c.stand_onset_deg),
            stand_complete_angle: units::deg_to_rad(c.stand_complete_deg),
            debounce: c.debounce_s,
            vent_time: c.vent_time_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolkitConfigFile {
    pub geometry: GeometryFile,
    pub design: DesignConstraintsFile,
    pub plant: PlantFile,
    pub controller: ControllerFile,
    pub emg: FilterSpec,
}

/// Plant parameters in SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant {
    pub chamber: Chamber,
    pub valve: ValveModel,
    pub dt: f64,
    pub t_max: f64,
    pub anchor_target: f64,
    pub anchor_time: f64,
}

/// Validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolkitConfig {
    pub geometry: ActuatorGeometry,
    pub design: DesignConstraints,
    pub plant: Plant,
    pub controller: ControllerConfig,
    pub emg: FilterSpec,
}

impl ToolkitConfig {
    pub fn knee_default() -> Self {
        Self::from_json_str(KNEE_DEFAULT_JSON, Path::new("<bundled knee_default.json>"))
            .expect("bundled configuration is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, path)
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let file: ToolkitConfigFile = parse_json(text, origin)?;
        Self::from_file(&file).map_err(|e| Error::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn from_file(file: &ToolkitConfigFile) -> Result<Self> {
        let geometry = ActuatorGeometry::from(&file.geometry);
        geometry.validate()?;
        let design = DesignConstraints::from(file.design.clone());
        design.validate()?;
        let chamber = Chamber {
            volume: match file.plant.volume_m3 {
                Some(v) => v,
                None => crate::pneumatic::chamber_volume(&geometry)?,
            },
            temperature: file.plant.temperature_k,
        };
        chamber.validate()?;
        file.plant.valve.validate()?;
        if !(file.plant.dt_s > 0.0 && file.plant.t_max_s > 0.0) {
            return Err(Error::domain("plant.dt_s and plant.t_max_s must be positive"));
        }
        let controller = ControllerConfig::from(&file.controller);
        controller.validate()?;
        Ok(ToolkitConfig {
            geometry,
            design,
            plant: Plant {
                chamber,
                valve: file.plant.valve,
                dt: file.plant.dt_s,
                t_max: file.plant.t_max_s,
                anchor_target: units::kpa_to_pa(file.plant.anchor_target_kpa),
                anchor_time: file.plant.anchor_time_s,
            },
            controller,
            emg: file.emg,
        })
    }
}

/// Deserializes JSON, reporting the offending key path and line on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Config {
            path: origin.to_path_buf(),
            message: format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()),
        }
    })
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(PathBuf::from(path), e))
}

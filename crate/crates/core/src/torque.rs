//! Closed-form static model of the zone-inflated exosuit.
//!
//! The assist torque of `n` cylindrical actuators of diameter `d` at gauge
//! pressure `p` and bending angle `theta` is
//!
//! ```text
//! T = pi * n * p * d^3 / (8 * cos^2(theta / 2))
//! ```
//!
//! and the inflation-deflation zone only accommodates a bend of `theta` if its
//! length satisfies `l > 2 * d * tan(theta / 2)`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Geometry of the actuator bundle. Lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorGeometry {
    /// Number of cylindrical actuators.
    pub n: u32,
    /// Actuator diameter.
    pub d: f64,
    /// Length of the inflation-deflation zone spanning the joint.
    pub l_dz: f64,
    /// Holding-zone lengths. Informational only; they do not enter the torque.
    pub l_hold_upper: f64,
    pub l_hold_lower: f64,
}

impl ActuatorGeometry {
    pub fn new(n: u32, d: f64, l_dz: f64) -> Result<Self> {
        let geom = ActuatorGeometry {
            n,
            d,
            l_dz,
            l_hold_upper: 0.0,
            l_hold_lower: 0.0,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// The built knee exosuit: four 32 mm cylinders. The zone length of 60 mm
    /// is an assumption; only its lower bound is known.
    pub fn knee_default() -> Self {
        ActuatorGeometry {
            n: 4,
            d: 0.032,
            l_dz: 0.060,
            l_hold_upper: 0.0,
            l_hold_lower: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::domain("actuator count n must be at least 1"));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::domain(format!("diameter must be positive, got {}", self.d)));
        }
        if !(self.l_dz.is_finite() && self.l_dz > 0.0) {
            return Err(Error::domain(format!(
                "inflation-deflation zone length must be positive, got {}",
                self.l_dz
            )));
        }
        if !(self.l_hold_upper.is_finite() && self.l_hold_lower.is_finite()) {
            return Err(Error::domain("holding-zone lengths must be finite"));
        }
        Ok(())
    }
}

/// Gauge pressure (Pa) and bending angle (rad, 0 = straight).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub p: f64,
    pub theta: f64,
}

impl OperatingPoint {
    pub fn new(p: f64, theta: f64) -> Result<Self> {
        let op = OperatingPoint { p, theta };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 0.0) {
            return Err(Error::domain(format!(
                "gauge pressure must be finite and non-negative, got {} Pa",
                self.p
            )));
        }
        check_angle(self.theta)
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(theta.is_finite() && (0.0..PI).contains(&theta)) {
        return Err(Error::domain(format!(
            "bending angle must lie in [0, 180) degrees, got {:.3} degrees",
            theta.to_degrees()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorquePrediction {
    pub torque: f64,
    pub geometry: ActuatorGeometry,
    pub operating_point: OperatingPoint,
}

/// One scatter point of a static torque measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredPoint {
    pub theta: f64,
    pub p: f64,
    pub torque_measured: f64,
}

/// Output torque in N·m.
pub fn predict_torque(geom: &ActuatorGeometry, op: &OperatingPoint) -> Result<f64> {
    geom.validate()?;
    op.validate()?;
    let half_cos = (op.theta / 2.0).cos();
    let n = f64::from(geom.n);
    Ok(PI * n * op.p * geom.d.powi(3) / (8.0 * half_cos * half_cos))
}

pub fn prediction(geom: &ActuatorGeometry, op: &OperatingPoint) -> Result<TorquePrediction> {
    Ok(TorquePrediction {
        torque: predict_torque(geom, op)?,
        geometry: *geom,
        operating_point: *op,
    })
}

/// Lower bound on the inflation-deflation zone length for a maximum bend.
/// Feasible lengths are strictly greater than this value.
pub fn min_dz_length(d: f64, theta_max: f64) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::domain(format!("diameter must be positive, got {d}")));
    }
    check_angle(theta_max)?;
    Ok(2.0 * d * (theta_max / 2.0).tan())
}

pub fn is_feasible(geom: &ActuatorGeometry, theta_max: f64) -> Result<bool> {
    is_feasible_with_margin(geom, theta_max, 1.0)
}

/// As [`is_feasible`], with the bound multiplied by `margin` (>= 1 adds slack).
pub fn is_feasible_with_margin(geom: &ActuatorGeometry, theta_max: f64, margin: f64) -> Result<bool> {
    geom.validate()?;
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::domain(format!("margin factor must be positive, got {margin}")));
    }
    Ok(geom.l_dz > margin * min_dz_length(geom.d, theta_max)?)
}

/// Gauge pressure (Pa) needed to produce `torque_target` at bending angle `theta`.
pub fn required_pressure(torque_target: f64, geom: &ActuatorGeometry, theta: f64) -> Result<f64> {
    geom.validate()?;
    check_angle(theta)?;
    if !(torque_target.is_finite() && torque_target >= 0.0) {
        return Err(Error::domain(format!(
            "torque target must be finite and non-negative, got {torque_target}"
        )));
    }
    let half_cos = (theta / 2.0).cos();
    Ok(8.0 * torque_target * half_cos * half_cos / (PI * f64::from(geom.n) * geom.d.powi(3)))
}

/// `|measured - predicted| / measured`.
pub fn relative_model_error(predicted: f64, measured: f64) -> Result<f64> {
    if !(measured.is_finite() && measured > 0.0) {
        return Err(Error::domain(format!("measured torque must be positive, got {measured}")));
    }
    Ok((measured - predicted).abs() / measured)
}

/// Torque on a pressure × angle grid; `surface[i][j]` uses `p_grid[i]` and `theta_grid[j]`.
pub fn torque_surface(geom: &ActuatorGeometry, p_grid: &[f64], theta_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if p_grid.is_empty() || theta_grid.is_empty() {
        return Err(Error::EmptyRange("torque surface grids must be non-empty".into()));
    }
    p_grid
        .iter()
        .map(|&p| {
            theta_grid
                .iter()
                .map(|&theta| predict_torque(geom, &OperatingPoint { p, theta }))
                .collect()
        })
        .collect()
}

/// `count` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (count - 1) as f64;
            (0..count).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Writes `p_kpa,theta_deg,torque_nm` in row-major grid order.
pub fn write_surface_csv<W: Write>(
    out: W,
    p_grid: &[f64],
    theta_grid: &[f64],
    surface: &[Vec<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_kpa", "theta_deg", "torque_nm"])?;
    for (p, row) in p_grid.iter().zip(surface) {
        for (theta, torque) in theta_grid.iter().zip(row) {
            w.write_record([
                format!("{}", units::pa_to_kpa(*p)),
                format!("{}", units::rad_to_deg(*theta)),
                format!("{torque:.6}"),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<surface>", e))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct MeasuredRow {
    theta_deg: f64,
    p_kpa: f64,
    torque_nm: f64,
}

/// Reads `theta_deg,p_kpa,torque_nm` rows into SI measured points.
pub fn read_measured_csv<R: Read>(input: R, origin: &Path) -> Result<Vec<MeasuredPoint>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["theta_deg", "p_kpa", "torque_nm"] {
        return Err(Error::Malformed {
            path: origin.to_path_buf(),
            row: 1,
            message: format!("expected header theta_deg,p_kpa,torque_nm, found {}", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut points = Vec::new();
    for (i, row) in reader.deserialize::<MeasuredRow>().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::Malformed {
            path: origin.to_path_buf(),
            row: row_no,
            message: e.to_string(),
        })?;
        if !row.torque_nm.is_finite() || !(row.p_kpa >= 0.0) {
            return Err(Error::Malformed {
                path: origin.to_path_buf(),
                row: row_no,
                message: "torque must be finite and pressure non-negative".into(),
            });
        }
        points.push(MeasuredPoint {
            theta: units::deg_to_rad(row.theta_deg),
            p: units::kpa_to_pa(row.p_kpa),
            torque_measured: row.torque_nm,
        });
    }
    Ok(points)
}

/// Model prediction and relative error for each measured point.
pub fn compare_measurements(geom: &ActuatorGeometry, points: &[MeasuredPoint]) -> Result<Vec<(MeasuredPoint, f64, f64)>> {
    points
        .iter()
        .map(|m| {
            let predicted = predict_torque(geom, &OperatingPoint::new(m.p, m.theta)?)?;
            Ok((*m, predicted, relative_model_error(predicted, m.torque_measured)?))
        })
        .collect()
}

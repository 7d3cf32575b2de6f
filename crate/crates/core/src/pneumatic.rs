//! Isothermal fill and vent dynamics of the inflation-deflation zone.
//!
//! Valves follow the sonic-conductance orifice model: choked flow
//! proportional to upstream pressure below the critical pressure ratio `b`,
//! scaled by the elliptic factor `sqrt(1 - ((r - b) / (1 - b))^2)` above it.
//! The chamber is a fixed volume of ideal gas at constant temperature, so
//! `dp/dt = R T / V * mdot`.
//!
//! All public pressures are gauge pressures in Pa unless a name says
//! otherwise; absolute pressure is gauge plus [`ATMOSPHERE_PA`].

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torque::ActuatorGeometry;
use crate::units::{self, ATMOSPHERE_PA};

/// Specific gas constant of dry air, J/(kg·K).
pub const R_AIR: f64 = 287.05;
/// Reference temperature of the conductance rating, K.
pub const T_STANDARD: f64 = 293.15;
/// Air density at the reference conditions, kg/m³.
pub const RHO_STANDARD: f64 = 1.185;
/// Default integration step, s.
pub const DEFAULT_DT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chamber {
    /// m³
    pub volume: f64,
    /// K
    pub temperature: f64,
}

impl Chamber {
    pub fn new(volume: f64) -> Result<Self> {
        let c = Chamber {
            volume,
            temperature: T_STANDARD,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_geometry(geom: &ActuatorGeometry) -> Result<Self> {
        Chamber::new(chamber_volume(geom)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(Error::domain(format!("chamber volume must be positive, got {}", self.volume)));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::domain(format!("temperature must be positive, got {}", self.temperature)));
        }
        Ok(())
    }

    /// Gas mass at an absolute pressure.
    pub fn gas_mass(&self, p_abs: f64) -> f64 {
        p_abs * self.volume / (R_AIR * self.temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValveModel {
    /// Sonic conductance C, m³/(s·Pa) at standard reference conditions.
    pub sonic_conductance: f64,
    /// Critical pressure ratio b.
    pub critical_ratio: f64,
}

impl Default for ValveModel {
    fn default() -> Self {
        ValveModel {
            sonic_conductance: 1e-9,
            critical_ratio: 0.5,
        }
    }
}

impl ValveModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sonic_conductance.is_finite() && self.sonic_conductance > 0.0) {
            return Err(Error::domain(format!(
                "sonic conductance must be positive, got {}",
                self.sonic_conductance
            )));
        }
        if !(self.critical_ratio > 0.0 && self.critical_ratio < 1.0) {
            return Err(Error::domain(format!(
                "critical pressure ratio must lie in (0, 1), got {}",
                self.critical_ratio
            )));
        }
        Ok(())
    }

    /// Time constant `V / (R T rho C)` of a chamber behind this valve; the
    /// pressure ratio across the valve moves at `phi(r) / tau` per second.
    pub fn time_constant(&self, chamber: &Chamber) -> f64 {
        chamber.volume / (R_AIR * chamber.temperature * flow_density(chamber.temperature) * self.sonic_conductance)
    }

    /// Largest step the explicit integrator accepts for `chamber`.
    pub fn stability_bound(&self, chamber: &Chamber) -> f64 {
        0.05 * (1.0 - self.critical_ratio) * self.time_constant(chamber)
    }
}

fn flow_density(temperature: f64) -> f64 {
    RHO_STANDARD * (T_STANDARD / temperature).sqrt()
}

/// Uniformly sampled gauge-pressure history.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl PressureTrace {
    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    pub fn last(&self) -> Option<f64> {
        self.samples.last().copied()
    }

    /// Writes `t_s,p_kpa_gauge`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_s", "p_kpa_gauge"])?;
        for (i, p) in self.samples.iter().enumerate() {
            w.write_record([format!("{:.6}", self.time(i)), format!("{:.6}", units::pa_to_kpa(*p))])?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    /// Reads `t_s,p_kpa_gauge`; timestamps must be uniformly spaced.
    pub fn read_csv<R: Read>(input: R, origin: &Path) -> Result<Self> {
        let malformed = |row: usize, message: String| Error::Malformed {
            path: origin.to_path_buf(),
            row,
            message,
        };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t_s", "p_kpa_gauge"] {
            return Err(malformed(1, "expected header t_s,p_kpa_gauge".into()));
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| malformed(i + 2, format!("column {} is not a finite number", k + 1)))
            };
            times.push(parse(0)?);
            samples.push(units::kpa_to_pa(parse(1)?));
        }
        if times.len() < 2 {
            return Err(malformed(1, "a trace needs at least two samples".into()));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(malformed(3, "timestamps must increase".into()));
        }
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.max(1e-3) {
                return Err(malformed(i + 3, "timestamps are not uniformly spaced".into()));
            }
        }
        Ok(PressureTrace { dt, samples })
    }
}

/// Step fill from `initial_pressure` toward a regulated `supply_pressure`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillScenario {
    pub supply_pressure: f64,
    pub initial_pressure: f64,
    /// Settling band as a fraction of the target.
    pub band: f64,
}

impl FillScenario {
    pub fn to_target(target: f64) -> Self {
        FillScenario {
            supply_pressure: target,
            initial_pressure: 0.0,
            band: 0.10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_gauge(self.supply_pressure, "supply pressure")?;
        check_gauge(self.initial_pressure, "initial pressure")?;
        if self.initial_pressure > self.supply_pressure {
            return Err(Error::domain("a fill needs supply pressure >= initial pressure"));
        }
        check_band(self.band)
    }
}

/// Vent from `initial_pressure` into a sink (atmosphere at 0, or a vacuum
/// pump inlet below 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VentScenario {
    pub initial_pressure: f64,
    pub sink_pressure: f64,
}

impl VentScenario {
    pub fn validate(&self) -> Result<()> {
        check_gauge(self.initial_pressure, "initial pressure")?;
        check_gauge(self.sink_pressure, "sink pressure")?;
        if self.sink_pressure > self.initial_pressure {
            return Err(Error::domain("a vent needs initial pressure >= sink pressure"));
        }
        Ok(())
    }
}

fn check_gauge(p: f64, what: &str) -> Result<()> {
    if !(p.is_finite() && p > -ATMOSPHERE_PA) {
        return Err(Error::domain(format!("{what} must be above absolute vacuum, got {p} Pa gauge")));
    }
    Ok(())
}

fn check_band(band: f64) -> Result<()> {
    if !(band > 0.0 && band < 1.0) {
        return Err(Error::domain(format!("band must lie in (0, 1), got {band}")));
    }
    Ok(())
}

/// Volume of the inflation-deflation zone, `n * pi * (d/2)^2 * l_dz`.
pub fn chamber_volume(geom: &ActuatorGeometry) -> Result<f64> {
    geom.validate()?;
    Ok(f64::from(geom.n) * PI * (geom.d / 2.0).powi(2) * geom.l_dz)
}

/// Mass flow through `valve` in kg/s. Pressures are absolute, `p_up >= p_down > 0`.
pub fn mass_flow(valve: &ValveModel, p_up: f64, p_down: f64, temperature: f64) -> Result<f64> {
    valve.validate()?;
    if !(p_down > 0.0 && p_up.is_finite()) {
        return Err(Error::domain(format!("absolute pressures must be positive, got {p_down} Pa")));
    }
    if p_down > p_up {
        return Err(Error::domain(format!(
            "downstream pressure {p_down} Pa exceeds upstream {p_up} Pa"
        )));
    }
    if !(temperature > 0.0) {
        return Err(Error::domain(format!("temperature must be positive, got {temperature}")));
    }
    let choked = valve.sonic_conductance * p_up * flow_density(temperature);
    Ok(choked * flow_factor(p_down / p_up, valve.critical_ratio))
}

fn flow_factor(ratio: f64, b: f64) -> f64 {
    if ratio <= b {
        1.0
    } else {
        let x = (ratio - b) / (1.0 - b);
        (1.0 - x * x).max(0.0).sqrt()
    }
}

/// Integrates a fill with explicit fixed steps of `dt` up to `t_max`.
///
/// The elliptic flow law reaches equilibrium in finite time; a step that
/// would cross the supply pressure lands on it instead.
pub fn simulate_fill(
    scenario: &FillScenario,
    chamber: &Chamber,
    valve: &ValveModel,
    dt: f64,
    t_max: f64,
) -> Result<PressureTrace> {
    scenario.validate()?;
    let supply = units::gauge_to_absolute(scenario.supply_pressure);
    integrate(
        chamber,
        valve,
        dt,
        t_max,
        units::gauge_to_absolute(scenario.initial_pressure),
        scenario.supply_pressure,
        |p| mass_flow(valve, supply, p, chamber.temperature),
    )
}

/// Integrates a vent; mirror image of [`simulate_fill`] with the chamber upstream.
pub fn simulate_vent(
    scenario: &VentScenario,
    chamber: &Chamber,
    valve: &ValveModel,
    dt: f64,
    t_max: f64,
) -> Result<PressureTrace> {
    scenario.validate()?;
    let sink = units::gauge_to_absolute(scenario.sink_pressure);
    integrate(
        chamber,
        valve,
        dt,
        t_max,
        units::gauge_to_absolute(scenario.initial_pressure),
        scenario.sink_pressure,
        |p| Ok(-mass_flow(valve, p, sink, chamber.temperature)?),
    )
}

/// `flow(p_abs)` returns the signed mass flow into the chamber, which drives
/// it toward the gauge pressure `equilibrium`.
fn integrate<F>(
    chamber: &Chamber,
    valve: &ValveModel,
    dt: f64,
    t_max: f64,
    p0_abs: f64,
    equilibrium: f64,
    flow: F,
) -> Result<PressureTrace>
where
    F: Fn(f64) -> Result<f64>,
{
    chamber.validate()?;
    valve.validate()?;
    if !(dt > 0.0 && dt.is_finite()) || !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::domain(format!("dt and t_max must be positive, got {dt} and {t_max}")));
    }
    let bound = valve.stability_bound(chamber);
    if dt > bound {
        return Err(Error::Instability { dt, bound });
    }
    let steps = (t_max / dt).round() as usize;
    let gain = R_AIR * chamber.temperature / chamber.volume;
    let mut samples = Vec::with_capacity(steps + 1);
    let eq_abs = units::gauge_to_absolute(equilibrium);
    let mut p = p0_abs;
    samples.push(units::absolute_to_gauge(p));
    for _ in 0..steps {
        let next = p + dt * gain * flow(p)?;
        if (next - eq_abs) * (p - eq_abs) <= 0.0 {
            // record the setpoint itself, not its round trip through absolute
            p = eq_abs;
            samples.push(equilibrium);
        } else {
            p = next;
            samples.push(units::absolute_to_gauge(p));
        }
    }
    Ok(PressureTrace { dt, samples })
}

/// First time after which every sample stays within `target * (1 ± band)`.
pub fn response_time(trace: &PressureTrace, target: f64, band: f64) -> Result<f64> {
    if trace.samples.is_empty() {
        return Err(Error::domain("response time of an empty trace"));
    }
    if !(target > 0.0) {
        return Err(Error::domain(format!("target must be positive, got {target}")));
    }
    check_band(band)?;
    let (lo, hi) = (target * (1.0 - band), target * (1.0 + band));
    let inside = |p: f64| (lo..=hi).contains(&p);
    let not_reached = || Error::NotReached {
        target_kpa: units::pa_to_kpa(target),
        band_pct: band * 100.0,
    };
    match trace.samples.iter().rposition(|&p| !inside(p)) {
        None => Ok(0.0),
        Some(i) if i + 1 == trace.samples.len() => Err(not_reached()),
        Some(i) => Ok(trace.time(i + 1)),
    }
}

/// Fill from atmosphere to `target` and report the settling time.
pub fn fill_response_time(target: f64, chamber: &Chamber, valve: &ValveModel, dt: f64, t_max: f64) -> Result<f64> {
    let scenario = FillScenario::to_target(target);
    let trace = simulate_fill(&scenario, chamber, valve, dt, t_max)?;
    response_time(&trace, target, scenario.band)
}

/// Options for [`calibrate_conductance_with`].
#[derive(Debug, Clone, Copy)]
pub struct Calibration {
    pub dt: f64,
    /// Simulated horizon as a multiple of the anchor time.
    pub horizon: f64,
    pub max_iterations: usize,
    /// Accepted relative mismatch of the fitted response time.
    pub tolerance: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            dt: DEFAULT_DT,
            horizon: 10.0,
            max_iterations: 200,
            tolerance: 0.01,
        }
    }
}

/// Fits the valve's sonic conductance so that a fill to `anchor_target`
/// settles in `anchor_time`.
pub fn calibrate_conductance(
    anchor_target: f64,
    anchor_time: f64,
    chamber: &Chamber,
    valve_template: &ValveModel,
) -> Result<ValveModel> {
    calibrate_conductance_with(anchor_target, anchor_time, chamber, valve_template, &Calibration::default())
}

pub fn calibrate_conductance_with(
    anchor_target: f64,
    anchor_time: f64,
    chamber: &Chamber,
    valve_template: &ValveModel,
    opts: &Calibration,
) -> Result<ValveModel> {
    valve_template.validate()?;
    if !(anchor_time > 0.0 && anchor_time.is_finite()) {
        return Err(Error::domain(format!("anchor time must be positive, got {anchor_time}")));
    }
    let t_max = anchor_time * opts.horizon;
    let with_c = |c: f64| ValveModel {
        sonic_conductance: c,
        ..*valve_template
    };
    // Settling time is non-increasing in C; a fill that never settles counts
    // as infinitely slow.
    let settle = |c: f64| -> Result<f64> {
        match fill_response_time(anchor_target, chamber, &with_c(c), opts.dt, t_max) {
            Err(Error::NotReached { .. }) => Ok(f64::INFINITY),
            other => other,
        }
    };

    let mut iterations = 0;
    let mut budget = || {
        iterations += 1;
        if iterations > opts.max_iterations {
            Err(Error::NoConvergence(format!(
                "no conductance reproduces {anchor_time} s at {} kPa within {} iterations",
                units::pa_to_kpa(anchor_target),
                opts.max_iterations
            )))
        } else {
            Ok(())
        }
    };

    // Bracket: slow at `lo`, fast enough at `hi`.
    let c0 = valve_template.sonic_conductance;
    let (mut lo, mut hi) = if settle(c0)? > anchor_time {
        let mut hi = c0;
        loop {
            budget()?;
            hi *= 2.0;
            if settle(hi)? <= anchor_time {
                break (hi / 2.0, hi);
            }
        }
    } else {
        let mut lo = c0;
        loop {
            budget()?;
            lo /= 2.0;
            if settle(lo)? > anchor_time {
                break (lo, lo * 2.0);
            }
        }
    };

    while hi / lo - 1.0 > 1e-9 {
        budget()?;
        let mid = (lo * hi).sqrt();
        if settle(mid)? > anchor_time {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let fitted = settle(hi)?;
    if (fitted - anchor_time).abs() > opts.tolerance * anchor_time {
        return Err(Error::NoConvergence(format!(
            "best conductance settles in {fitted} s, anchor is {anchor_time} s"
        )));
    }
    Ok(with_c(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chamber() -> Chamber {
        Chamber::from_geometry(&ActuatorGeometry::knee_default()).unwrap()
    }

    fn valve(c: f64) -> ValveModel {
        ValveModel {
            sonic_conductance: c,
            critical_ratio: 0.5,
        }
    }

    #[test]
    fn volume_examples() {
        let g = ActuatorGeometry::knee_default();
        assert_abs_diff_eq!(chamber_volume(&g).unwrap(), 1.930_194_526_365_569e-4, epsilon = 1e-16);
        let one = ActuatorGeometry { n: 1, ..g };
        assert_abs_diff_eq!(chamber_volume(&one).unwrap() * 4.0, chamber_volume(&g).unwrap(), epsilon = 1e-18);
        let tiny = ActuatorGeometry { l_dz: 1e-12, ..g };
        assert!(chamber_volume(&tiny).unwrap() < 1e-14);
    }

    #[test]
    fn flow_regimes() {
        let v = valve(2e-9);
        let t = T_STANDARD;
        assert_eq!(mass_flow(&v, 2e5, 2e5, t).unwrap(), 0.0);
        let choked = mass_flow(&v, 2e5, 0.5e5, t).unwrap();
        assert_abs_diff_eq!(choked, 2e-9 * 2e5 * RHO_STANDARD, epsilon = 1e-18);
        assert_abs_diff_eq!(mass_flow(&v, 2e5, 1e5, t).unwrap(), choked, epsilon = 1e-18);
        let mid = mass_flow(&v, 2e5, 1.5e5, t).unwrap();
        assert_abs_diff_eq!(mid / choked, 0.75f64.sqrt(), epsilon = 1e-12);
        assert!(matches!(mass_flow(&v, 1e5, 2e5, t), Err(Error::Domain(_))));
    }

    #[test]
    fn flow_is_continuous_at_critical_ratio() {
        let v = valve(2e-9);
        let p_up = 3e5;
        let at = mass_flow(&v, p_up, 0.5 * p_up, T_STANDARD).unwrap();
        let above = mass_flow(&v, p_up, 0.5 * p_up * (1.0 + 1e-12), T_STANDARD).unwrap();
        assert_abs_diff_eq!(at, above, epsilon = at * 1e-6);
    }

    #[test]
    fn flat_fill_when_supply_equals_initial() {
        let s = FillScenario {
            supply_pressure: 50_000.0,
            initial_pressure: 50_000.0,
            band: 0.1,
        };
        let tr = simulate_fill(&s, &chamber(), &valve(2e-9), DEFAULT_DT, 0.2).unwrap();
        assert!(tr.samples.iter().all(|&p| (p - 50_000.0).abs() < 1e-9));
        assert_eq!(response_time(&tr, 50_000.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn fill_is_monotone_and_bounded() {
        let s = FillScenario::to_target(100_000.0);
        let tr = simulate_fill(&s, &chamber(), &valve(2e-9), DEFAULT_DT, 2.0).unwrap();
        assert!(tr.samples.windows(2).all(|w| w[1] >= w[0]));
        assert!(tr.samples.iter().all(|&p| p <= 100_000.0));
        assert!(tr.last().unwrap() > 99_000.0);
    }

    #[test]
    fn large_step_is_reported() {
        let s = FillScenario::to_target(100_000.0);
        let err = simulate_fill(&s, &chamber(), &valve(2e-9), 0.5, 2.0).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn response_time_edge_cases() {
        let flat = PressureTrace {
            dt: 0.01,
            samples: vec![1.0; 10],
        };
        assert_eq!(response_time(&flat, 1.0, 0.1).unwrap(), 0.0);
        let never = PressureTrace {
            dt: 0.01,
            samples: vec![0.0; 10],
        };
        assert!(matches!(response_time(&never, 1.0, 0.1), Err(Error::NotReached { .. })));
        // leaves the band again: the later re-entry counts
        let bounce = PressureTrace {
            dt: 1.0,
            samples: vec![0.0, 1.0, 1.5, 1.0, 1.0],
        };
        assert_eq!(response_time(&bounce, 1.0, 0.1).unwrap(), 3.0);
        assert!(response_time(&flat, 0.0, 0.1).is_err());
    }

    #[test]
    fn exponential_crossing() {
        let tau = 0.2;
        let dt = 1e-3;
        let target = 80_000.0;
        let samples = (0..2000)
            .map(|i| target * (1.0 - (-(i as f64 * dt) / tau).exp()))
            .collect();
        let t = response_time(&PressureTrace { dt, samples }, target, 0.10).unwrap();
        assert!((t - tau * 10f64.ln()).abs() <= dt, "t = {t}");
    }

    #[test]
    fn vent_examples() {
        let ch = chamber();
        let v = valve(2e-9);
        let flat = simulate_vent(
            &VentScenario {
                initial_pressure: 0.0,
                sink_pressure: 0.0,
            },
            &ch,
            &v,
            DEFAULT_DT,
            0.1,
        )
        .unwrap();
        assert!(flat.samples.iter().all(|&p| p.abs() < 1e-9));

        let to_atm = simulate_vent(
            &VentScenario {
                initial_pressure: 100_000.0,
                sink_pressure: 0.0,
            },
            &ch,
            &v,
            DEFAULT_DT,
            3.0,
        )
        .unwrap();
        assert!(to_atm.samples.windows(2).all(|w| w[1] <= w[0]));
        assert!(to_atm.samples.iter().all(|&p| p >= 0.0));
        assert!(to_atm.last().unwrap().abs() < 100.0);

        let to_vac = simulate_vent(
            &VentScenario {
                initial_pressure: 100_000.0,
                sink_pressure: -50_000.0,
            },
            &ch,
            &v,
            DEFAULT_DT,
            3.0,
        )
        .unwrap();
        let reach = |tr: &PressureTrace| tr.samples.iter().position(|&p| p <= 10_000.0).unwrap();
        assert!(reach(&to_vac) < reach(&to_atm));
    }

    #[test]
    fn trace_csv_round_trip() {
        let tr = PressureTrace {
            dt: 0.001,
            samples: vec![0.0, 1_000.0, 2_500.0],
        };
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_s,p_kpa_gauge\n0.000000,0.000000\n0.001000,1.000000\n"));
        let back = PressureTrace::read_csv(buf.as_slice(), Path::new("t.csv")).unwrap();
        assert_abs_diff_eq!(back.dt, 0.001, epsilon = 1e-12);
        assert_eq!(back.samples.len(), 3);
        assert_abs_diff_eq!(back.samples[2], 2_500.0, epsilon = 1e-6);
    }

    #[test]
    fn calibration_rejects_bad_anchor() {
        assert!(calibrate_conductance(100_000.0, 0.0, &chamber(), &ValveModel::default()).is_err());
    }
}

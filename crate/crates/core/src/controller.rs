//! Sit-to-stand valve controller.
//!
//! Solenoid valve 1 inflates the inflation-deflation zone, solenoid valve 2
//! vents it. The holding zones are pressurized once on activation and kept
//! at a constant command until the session ends.
//!
//! Thigh angle is measured from horizontal: close to 0 when seated, close
//! to 90° when standing. The standing direction is the sign of
//! `stand_complete_angle - stand_onset_angle`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostureSample {
    pub t: f64,
    /// Radians from horizontal.
    pub thigh_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Gauge Pa delivered to the inflation-deflation zone.
    pub assist_pressure: f64,
    /// Gauge Pa held in the inflation-holding zones.
    pub hold_pressure: f64,
    pub stand_onset_angle: f64,
    pub stand_complete_angle: f64,
    /// Seconds a threshold crossing must persist.
    pub debounce: f64,
    /// Seconds the vent valve stays open before the zone counts as empty.
    pub vent_time: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            assist_pressure: 100_000.0,
            hold_pressure: 120_000.0,
            stand_onset_angle: 20f64.to_radians(),
            stand_complete_angle: 70f64.to_radians(),
            debounce: 0.1,
            vent_time: 0.3,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stand_onset_angle == self.stand_complete_angle {
            return Err(Error::domain("stand onset and completion angles must differ"));
        }
        if !(self.debounce >= 0.0 && self.debounce.is_finite()) {
            return Err(Error::domain(format!("debounce must be non-negative, got {}", self.debounce)));
        }
        if !(self.vent_time >= 0.0 && self.vent_time.is_finite()) {
            return Err(Error::domain(format!("vent time must be non-negative, got {}", self.vent_time)));
        }
        if !(self.assist_pressure >= 0.0 && self.hold_pressure >= 0.0) {
            return Err(Error::domain("pressures must be non-negative"));
        }
        Ok(())
    }

    fn standing_sign(&self) -> f64 {
        (self.stand_complete_angle - self.stand_onset_angle).signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValveState {
    pub sv1_open: bool,
    pub sv2_open: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    HoldPressurizing,
    Ready,
    Assisting,
    Venting,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Idle,
        Phase::HoldPressurizing,
        Phase::Ready,
        Phase::Assisting,
        Phase::Venting,
    ];

    /// Valve positions are a function of the phase alone.
    pub fn valves(self) -> ValveState {
        match self {
            Phase::Assisting => ValveState {
                sv1_open: true,
                sv2_open: false,
            },
            Phase::Venting => ValveState {
                sv1_open: false,
                sv2_open: true,
            },
            _ => ValveState::default(),
        }
    }

    fn holds(self) -> bool {
        !matches!(self, Phase::Idle)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Idle => "idle",
            Phase::HoldPressurizing => "hold_pressurizing",
            Phase::Ready => "ready",
            Phase::Assisting => "assisting",
            Phase::Venting => "venting",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    Activate,
    HoldAtPressure,
    StandOnset,
    StandComplete,
    /// The inflation-deflation zone has vented.
    PressureLow,
    SessionEnd,
}

impl Event {
    pub const ALL: [Event; 6] = [
        Event::Activate,
        Event::HoldAtPressure,
        Event::StandOnset,
        Event::StandComplete,
        Event::PressureLow,
        Event::SessionEnd,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub phase: Phase,
    pub valves: ValveState,
    /// Holding-zone pressure command, gauge Pa.
    pub hold_command: f64,
    /// Set when the event is not defined for the current phase.
    pub diagnostic: Option<String>,
}

/// Total transition function of the controller.
pub fn step_phase(phase: Phase, event: Event, t: f64, config: &ControllerConfig) -> Transition {
    use Event::*;
    use Phase::*;
    let next = match (phase, event) {
        (_, SessionEnd) => Some(Idle),
        (Idle, Activate) => Some(HoldPressurizing),
        (HoldPressurizing, HoldAtPressure) => Some(Ready),
        (Ready, StandOnset) => Some(Assisting),
        (Assisting, StandComplete) => Some(Venting),
        (Venting, PressureLow) => Some(Ready),
        _ => None,
    };
    let diagnostic = next
        .is_none()
        .then(|| format!("t={t:.4}s: ignoring {event:?} in phase {phase}"));
    let phase = next.unwrap_or(phase);
    Transition {
        phase,
        valves: phase.valves(),
        hold_command: if phase.holds() { config.hold_pressure } else { 0.0 },
        diagnostic,
    }
}

/// A debounced threshold crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Interpolated time the angle reached the threshold.
    pub t_cross: f64,
    /// Time the crossing was confirmed, `t_cross + debounce`.
    pub t_confirm: f64,
    /// Index of the first sample at or after `t_confirm`.
    pub confirm_index: usize,
}

/// First crossing of `threshold` in direction `sign` at or after sample
/// `from` that stays across for `debounce` seconds. The sample before the
/// crossing must be on the near side, so a trace that starts across the
/// threshold does not count until it comes back.
pub fn detect_crossing(
    trace: &[PostureSample],
    from: usize,
    threshold: f64,
    sign: f64,
    debounce: f64,
) -> Option<Crossing> {
    let across = |s: &PostureSample| sign * (s.thigh_angle - threshold) >= 0.0;
    let mut i = from.max(1);
    while i < trace.len() {
        let (prev, cur) = (&trace[i - 1], &trace[i]);
        if across(cur) && !across(prev) {
            let frac = (threshold - prev.thigh_angle) / (cur.thigh_angle - prev.thigh_angle);
            let t_cross = prev.t + frac * (cur.t - prev.t);
            let t_confirm = t_cross + debounce;
            let mut j = i;
            while j < trace.len() && trace[j].t < t_confirm && across(&trace[j]) {
                j += 1;
            }
            match trace.get(j) {
                Some(s) if across(s) => {
                    return Some(Crossing {
                        t_cross,
                        t_confirm,
                        confirm_index: j,
                    })
                }
                // dropped back before the debounce elapsed
                Some(_) => i = j,
                // trace ended before the crossing could be confirmed
                None => return None,
            }
        }
        i += 1;
    }
    None
}

/// Time the thigh first rises through the onset threshold and stays there
/// for the debounce interval.
pub fn detect_stand_onset(trace: &[PostureSample], config: &ControllerConfig) -> Option<f64> {
    detect_crossing(trace, 0, config.stand_onset_angle, config.standing_sign(), config.debounce).map(|c| c.t_cross)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub t: f64,
    pub event: Event,
    pub phase: Phase,
    pub valves: ValveState,
    pub hold_command: f64,
}

/// Replays a posture trace through the controller.
///
/// The session is activated at the first sample and the holding zone is
/// taken as pressurized immediately. Onset and completion events fire when
/// their crossings are confirmed. The session ends at the last sample.
pub fn run_session(trace: &[PostureSample], config: &ControllerConfig) -> Result<Vec<LogEntry>> {
    config.validate()?;
    validate_trace(trace)?;
    let sign = config.standing_sign();
    let t_start = trace.first().map_or(0.0, |s| s.t);
    let t_end = trace.last().map_or(0.0, |s| s.t);

    let mut log = Vec::new();
    let mut phase = Phase::Idle;
    let mut emit = |phase: &mut Phase, event: Event, t: f64| {
        let tr = step_phase(*phase, event, t, config);
        if let Some(d) = &tr.diagnostic {
            log::debug!("{d}");
        }
        *phase = tr.phase;
        log.push(LogEntry {
            t,
            event,
            phase: tr.phase,
            valves: tr.valves,
            hold_command: tr.hold_command,
        });
    };

    emit(&mut phase, Event::Activate, t_start);
    emit(&mut phase, Event::HoldAtPressure, t_start);

    let mut cursor = 0;
    while let Some(onset) = detect_crossing(trace, cursor, config.stand_onset_angle, sign, config.debounce) {
        emit(&mut phase, Event::StandOnset, onset.t_confirm);
        let Some(done) = detect_crossing(
            trace,
            onset.confirm_index,
            config.stand_complete_angle,
            sign,
            config.debounce,
        ) else {
            break;
        };
        emit(&mut phase, Event::StandComplete, done.t_confirm);
        let t_low = done.t_confirm + config.vent_time;
        if t_low > t_end {
            break;
        }
        emit(&mut phase, Event::PressureLow, t_low);
        cursor = trace.partition_point(|s| s.t < t_low);
    }

    emit(&mut phase, Event::SessionEnd, t_end);
    Ok(log)
}

fn validate_trace(trace: &[PostureSample]) -> Result<()> {
    for (i, w) in trace.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(Error::domain(format!(
                "posture timestamps must strictly increase (sample {})",
                i + 1
            )));
        }
    }
    if trace.iter().any(|s| !s.t.is_finite() || !s.thigh_angle.is_finite()) {
        return Err(Error::domain("posture samples must be finite"));
    }
    Ok(())
}

/// Closed intervals during which the inflate valve was open.
pub fn assist_intervals(log: &[LogEntry]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    for e in log {
        match (open, e.valves.sv1_open) {
            (None, true) => open = Some(e.t),
            (Some(t0), false) => {
                out.push((t0, e.t));
                open = None;
            }
            _ => {}
        }
    }
    out
}

/// Writes `t_s,phase,sv1,sv2,hold_cmd_kpa`.
pub fn write_log_csv<W: Write>(out: W, log: &[LogEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "phase", "sv1", "sv2", "hold_cmd_kpa"])?;
    for e in log {
        w.write_record([
            format!("{:.4}", e.t),
            e.phase.to_string(),
            u8::from(e.valves.sv1_open).to_string(),
            u8::from(e.valves.sv2_open).to_string(),
            format!("{:.1}", units::pa_to_kpa(e.hold_command)),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<log>", e))?;
    Ok(())
}

/// Reads `t_s,thigh_angle_deg`.
pub fn read_posture_csv<R: Read>(input: R, origin: &Path) -> Result<Vec<PostureSample>> {
    let malformed = |row: usize, message: String| Error::Malformed {
        path: origin.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t_s", "thigh_angle_deg"] {
        return Err(malformed(1, "expected header t_s,thigh_angle_deg".into()));
    }
    let mut out: Vec<PostureSample> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| malformed(row, e.to_string()))?;
        if rec.len() != 2 {
            return Err(malformed(row, format!("expected 2 columns, found {}", rec.len())));
        }
        let num = |k: usize| {
            rec[k]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| malformed(row, format!("'{}' is not a finite number", &rec[k])))
        };
        let sample = PostureSample {
            t: num(0)?,
            thigh_angle: units::deg_to_rad(num(1)?),
        };
        if let Some(prev) = out.last() {
            if !(sample.t > prev.t) {
                return Err(malformed(row, "timestamps must strictly increase".into()));
            }
        }
        out.push(sample);
    }
    Ok(out)
}

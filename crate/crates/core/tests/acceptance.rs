//! Acceptance gate. One PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails. Every check compares the library against an oracle
//! computed here, not against the library's own validation harness.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use exosuit::config::ToolkitConfig;
use exosuit::controller::{self, ControllerConfig, Event, Phase, PostureSample};
use exosuit::design::{self, DesignCandidate, DesignConstraints};
use exosuit::emg::{self, FilterSpec};
use exosuit::pneumatic::{self, FillScenario, PressureTrace};
use exosuit::torque::{self, ActuatorGeometry, OperatingPoint};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn torque_of(n: u32, d: f64, p: f64, theta: f64) -> f64 {
    let geom = ActuatorGeometry::new(n, d, 1.0).unwrap();
    torque::predict_torque(&geom, &OperatingPoint::new(p, theta).unwrap()).unwrap()
}

fn c1_star_point() -> Outcome {
    let t = torque_of(4, 0.032, 100_000.0, 80f64.to_radians());
    // pi * 4 * 1e5 * 0.032^3 / (8 cos^2 40deg), evaluated at 50 digits
    let oracle = 8.771_257_863_448_474;
    ensure(
        (t - 8.77).abs() <= 0.01 && rel(t, oracle) < 1e-12,
        format!("T = {t:.6} N·m (expected 8.77 ± 0.01)"),
    )
}

fn c2_model_error() -> Outcome {
    let e = torque::relative_model_error(8.77, 9.1).map_err(|e| e.to_string())? * 100.0;
    ensure((e - 3.6).abs() <= 0.1, format!("error = {e:.3}% (expected 3.6 ± 0.1)"))
}

fn c3_scaling() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0f64;
    let mut non_monotone = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=5);
        let d = rng.gen_range(0.005..0.08);
        let p = rng.gen_range(1e3..3e5);
        let theta = rng.gen_range(0.0..3.0);
        let k = rng.gen_range(1.1..4.0);
        let base = torque_of(n, d, p, theta);
        worst = worst
            .max(rel(torque_of(n, d, k * p, theta), k * base))
            .max(rel(torque_of(2 * n, d, p, theta), 2.0 * base))
            .max(rel(torque_of(n, k * d, p, theta), k.powi(3) * base));
        let theta2 = theta + rng.gen_range(1e-6..(3.1 - theta).max(2e-6));
        if theta2 < PI && torque_of(n, d, p, theta2) <= base {
            non_monotone += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-9 && non_monotone == 0 && elapsed < Duration::from_secs(1),
        format!("1000 samples, max rel dev {worst:.1e}, {non_monotone} monotonicity failures, {elapsed:.2?}"),
    )
}

fn c4_feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut wrong = 0;
    for _ in 0..100 {
        let d = rng.gen_range(0.005..0.08);
        let theta: f64 = rng.gen_range(0.05..2.8);
        let bound = 2.0 * d * (theta / 2.0).tan();
        let at = ActuatorGeometry::new(4, d, bound).unwrap();
        let past = ActuatorGeometry::new(4, d, bound + 1e-9).unwrap();
        if torque::is_feasible(&at, theta).unwrap() || !torque::is_feasible(&past, theta).unwrap() {
            wrong += 1;
        }
    }
    ensure(wrong == 0, format!("100 (d, θ) pairs, {wrong} misclassified at the bound"))
}

fn brute_front(all: &[DesignCandidate]) -> HashSet<(u32, u64)> {
    let beats = |a: &DesignCandidate, b: &DesignCandidate| {
        let ge = [a.torque >= b.torque, a.profile <= b.profile, a.stress_area >= b.stress_area];
        let gt = [a.torque > b.torque, a.profile < b.profile, a.stress_area > b.stress_area];
        ge.iter().all(|&x| x) && gt.iter().any(|&x| x)
    };
    all.iter()
        .filter(|b| !all.iter().any(|a| beats(a, b)))
        .map(|c| (c.n, c.d.to_bits()))
        .collect()
}

fn c5_design() -> Outcome {
    let start = Instant::now();
    let all = design::enumerate_designs(&DesignConstraints::default()).map_err(|e| e.to_string())?;
    let star = all
        .iter()
        .find(|c| c.n == 4 && (c.d - 0.032).abs() < 1e-12)
        .ok_or("no (4, 32 mm) candidate on the grid")?;
    let front: HashSet<_> = design::pareto_front(&all).iter().map(|c| (c.n, c.d.to_bits())).collect();
    let oracle = brute_front(&all);
    let elapsed = start.elapsed();
    ensure(
        all.len() == 510 && (star.torque - 8.77).abs() <= 0.01 && front == oracle && elapsed < Duration::from_secs(1),
        format!(
            "{} candidates, star {:.3} N·m, front {} vs brute force {}, {elapsed:.2?}",
            all.len(),
            star.torque,
            front.len(),
            oracle.len()
        ),
    )
}

fn c6_calibration() -> Outcome {
    let start = Instant::now();
    let plant = ToolkitConfig::knee_default().plant;
    let valve = pneumatic::calibrate_conductance(100_000.0, 0.5, &plant.chamber, &plant.valve).map_err(|e| e.to_string())?;
    let t = |kpa: f64| pneumatic::fill_response_time(kpa * 1e3, &plant.chamber, &valve, plant.dt, plant.t_max);
    let times: Vec<f64> = [100.0, 80.0, 60.0, 40.0]
        .iter()
        .map(|&k| t(k))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let held_out_ok = times[1..]
        .iter()
        .zip([0.34, 0.32, 0.30])
        .all(|(t, reference)| (t - reference).abs() <= 0.15);
    let ordered = times.windows(2).all(|w| w[0] >= w[1]);
    let elapsed = start.elapsed();
    ensure(
        (times[0] - 0.5).abs() <= 0.02 && held_out_ok && ordered && elapsed < Duration::from_secs(5),
        format!(
            "t100 {:.3} s, t80 {:.3}, t60 {:.3}, t40 {:.3} (refs 0.34/0.32/0.30 ± 0.15), {elapsed:.2?}",
            times[0], times[1], times[2], times[3]
        ),
    )
}

fn c7_physics() -> Outcome {
    let plant = ToolkitConfig::knee_default().plant;
    let valve = pneumatic::calibrate_conductance(100_000.0, 0.5, &plant.chamber, &plant.valve).map_err(|e| e.to_string())?;
    let target = 100_000.0;
    let scenario = FillScenario::to_target(target);
    let trace = pneumatic::simulate_fill(&scenario, &plant.chamber, &valve, plant.dt, plant.t_max).map_err(|e| e.to_string())?;

    // ideal-gas mass vs. the integrated ISO 6358 flow, step by step
    let (r, temp, v) = (287.05, plant.chamber.temperature, plant.chamber.volume);
    let atm = 101_325.0;
    let supply = target + atm;
    let mut worst = 0f64;
    for w in trace.samples.windows(2) {
        let (p0, p1) = (w[0] + atm, w[1] + atm);
        if p1 >= supply {
            break;
        }
        let dm = (p1 - p0) * v / (r * temp);
        let ratio = p0 / supply;
        let b = valve.critical_ratio;
        let factor = if ratio <= b { 1.0 } else { (1.0 - ((ratio - b) / (1.0 - b)).powi(2)).sqrt() };
        let rho0 = 1.185 * (293.15 / temp).sqrt();
        let mdot = valve.sonic_conductance * supply * rho0 * factor;
        worst = worst.max(rel(dm, mdot * plant.dt));
    }
    let overshoot = trace.samples.iter().filter(|&&p| p > target).count();

    let coarse = pneumatic::response_time(&trace, target, 0.1).map_err(|e| e.to_string())?;
    let fine_trace = pneumatic::simulate_fill(&scenario, &plant.chamber, &valve, plant.dt / 2.0, plant.t_max).map_err(|e| e.to_string())?;
    let fine = pneumatic::response_time(&fine_trace, target, 0.1).map_err(|e| e.to_string())?;

    let (tau, dt) = (0.15, 5e-4);
    let exp = PressureTrace {
        dt,
        samples: (0..4000).map(|i| target * (1.0 - (-(i as f64) * dt / tau).exp())).collect(),
    };
    let t_exp = pneumatic::response_time(&exp, target, 0.1).map_err(|e| e.to_string())?;

    ensure(
        worst <= 1e-6 && overshoot == 0 && rel(fine, coarse) < 0.01 && (t_exp - tau * 10f64.ln()).abs() <= dt,
        format!(
            "mass err {worst:.1e}, overshoot {overshoot}, dt/2 shift {:.3}%, exp settle {t_exp:.4} vs {:.4} s",
            rel(fine, coarse) * 100.0,
            tau * 10f64.ln()
        ),
    )
}

fn c8_controller() -> Outcome {
    let cfg = ControllerConfig::default();
    let mut bad = 0usize;
    let mut edges = 0usize;
    for phase in Phase::ALL {
        for event in Event::ALL {
            let tr = controller::step_phase(phase, event, 0.0, &cfg);
            edges += 1;
            if tr.valves.sv1_open && tr.valves.sv2_open {
                bad += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut hold_off = 0usize;
    for _ in 0..10_000 {
        let mut phase = Phase::Idle;
        let mut active = false;
        for k in 0..rng.gen_range(1..50) {
            let event = Event::ALL[rng.gen_range(0..Event::ALL.len())];
            let tr = controller::step_phase(phase, event, k as f64 * 0.01, &cfg);
            if tr.valves.sv1_open && tr.valves.sv2_open {
                bad += 1;
            }
            active = match (phase, tr.phase) {
                (Phase::Idle, Phase::HoldPressurizing) => true,
                (_, Phase::Idle) => false,
                _ => active,
            };
            if active && tr.hold_command != 120_000.0 {
                hold_off += 1;
            }
            phase = tr.phase;
        }
    }
    // random posture traces through the full replay
    for _ in 0..200 {
        let mut angle: f64 = rng.gen_range(0.0..90.0);
        let trace: Vec<PostureSample> = (0..400)
            .map(|i| {
                angle = (angle + rng.gen_range(-8.0..8.0)).clamp(-10.0, 100.0);
                PostureSample {
                    t: i as f64 * 0.01,
                    thigh_angle: angle.to_radians(),
                }
            })
            .collect();
        let log = controller::run_session(&trace, &cfg).map_err(|e| e.to_string())?;
        for e in &log[..log.len() - 1] {
            if e.valves.sv1_open && e.valves.sv2_open {
                bad += 1;
            }
            if e.hold_command != 120_000.0 {
                hold_off += 1;
            }
        }
    }
    ensure(
        bad == 0 && hold_off == 0,
        format!("{edges} edges + 10000 event fuzz + 200 traces: {bad} unsafe valve states, {hold_off} hold-command deviations"),
    )
}

/// Analog prototype magnitude at the prewarped frequency.
fn analog_bandpass(order: i32, lo: f64, hi: f64, fs: f64, f: f64) -> f64 {
    let warp = |x: f64| 2.0 * fs * (PI * x / fs).tan();
    let (wl, wh, w) = (warp(lo), warp(hi), warp(f));
    let x = (w * w - wl * wh) / ((wh - wl) * w);
    1.0 / (1.0 + x.powi(2 * order)).sqrt()
}

fn c9_filter() -> Outcome {
    let fs = 2000.0;
    let spec = FilterSpec::default();
    let filter = emg::design_bandpass(&spec, fs).map_err(|e| e.to_string())?;

    // the -3 dB points, from the filter's own difference equation
    let sine_gain = |f: f64| {
        let n = (6.0 * fs) as usize;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        let y = filter.apply(&x);
        let tail = (2.0 * fs) as usize;
        let (mut s, mut c) = (0.0, 0.0);
        for (i, yi) in y.iter().enumerate().skip(n - tail) {
            let ph = 2.0 * PI * f * i as f64 / fs;
            s += yi * ph.sin();
            c += yi * ph.cos();
        }
        2.0 * Complex64::new(s, c).norm() / tail as f64
    };
    let db = |g: f64| 20.0 * g.log10();
    let (lo_db, hi_db) = (db(sine_gain(10.0)), db(sine_gain(400.0)));

    let max_pole = filter.poles().iter().map(|p| p.norm()).fold(0.0, f64::max);
    let freqs: Vec<f64> = (0..20).map(|i| 5.0 * (800.0f64 / 5.0).powf(i as f64 / 19.0)).collect();
    let worst = freqs
        .iter()
        .map(|&f| rel(sine_gain(f), analog_bandpass(4, 10.0, 400.0, fs, f)))
        .fold(0.0, f64::max);
    ensure(
        (lo_db + 3.0).abs() <= 0.5 && (hi_db + 3.0).abs() <= 0.5 && max_pole < 1.0 && worst <= 0.05,
        format!(
            "{lo_db:.2} dB @ 10 Hz, {hi_db:.2} dB @ 400 Hz, max |pole| {max_pole:.6}, worst sine-gain dev {:.2}% over 20 freqs",
            worst * 100.0
        ),
    )
}

fn c10_reduction() -> Outcome {
    let avg = emg::average_reduction(&[7.7, 23.2, 12.9, 16.0]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let a = rng.gen_range(0.01..10.0);
        let b = rng.gen_range(0.01..10.0);
        let k = 10f64.powf(rng.gen_range(-3.0..3.0));
        let r = emg::percent_reduction(a, b).unwrap();
        worst = worst.max((emg::percent_reduction(k * a, k * b).unwrap() - r).abs());
    }
    ensure(
        (avg - 14.95).abs() < 1e-12 && worst < 1e-9,
        format!("average {avg}%, scale invariance max dev {worst:.1e} over 1000 pairs"),
    )
}

fn c11_end_to_end() -> Outcome {
    let start = Instant::now();
    let exe = env!("CARGO_BIN_EXE_exosuit");
    let clean = Command::new(exe).args(["validate", "paper"]).output().map_err(|e| e.to_string())?;
    let perturbed = Command::new(exe)
        .args(["validate", "paper", "--perturb-torque", "1.05"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(
        clean.status.code() == Some(0) && perturbed.status.code().is_some_and(|c| c != 0) && elapsed < Duration::from_secs(30),
        format!(
            "validate paper -> {:?}, perturbed -> {:?}, {elapsed:.2?}",
            clean.status.code(),
            perturbed.status.code()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("star-point torque", c1_star_point),
        ("model vs measurement error", c2_model_error),
        ("torque scaling laws", c3_scaling),
        ("feasibility boundary", c4_feasibility),
        ("design diagram and front", c5_design),
        ("valve calibration round trip", c6_calibration),
        ("simulator physics", c7_physics),
        ("controller safety", c8_controller),
        ("band-pass filter", c9_filter),
        ("reduction arithmetic", c10_reduction),
        ("end-to-end validate", c11_end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name:<30} {detail}", i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

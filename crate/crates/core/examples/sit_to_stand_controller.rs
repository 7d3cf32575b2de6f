//! Replay a synthetic two-repetition sit-to-stand trace through the valve
//! controller and print the command log.
use std::f64::consts::PI;
use std::io;

use exosuit::controller::{self, ControllerConfig, PostureSample};

/// Thigh angle from horizontal: seated, rise over 1.2 s, stand, sit back.
fn thigh_angle(t: f64) -> f64 {
    let rep = |t0: f64| {
        let up = ((t - t0) / 1.2).clamp(0.0, 1.0);
        let down = ((t - t0 - 2.5) / 1.2).clamp(0.0, 1.0);
        0.5 * (1.0 - (PI * up).cos()) - 0.5 * (1.0 - (PI * down).cos())
    };
    (5.0 + 80.0 * (rep(1.0) + rep(5.5))).to_radians()
}

fn main() -> exosuit::error::Result<()> {
    let fs = 100.0;
    let trace: Vec<PostureSample> = (0..1000)
        .map(|i| {
            let t = i as f64 / fs;
            PostureSample { t, thigh_angle: thigh_angle(t) }
        })
        .collect();

    let config = ControllerConfig::default();
    let log = controller::run_session(&trace, &config)?;
    controller::write_log_csv(io::stdout(), &log)?;

    for (start, end) in controller::assist_intervals(&log) {
        eprintln!("assisting {start:.3} s .. {end:.3} s");
    }
    Ok(())
}

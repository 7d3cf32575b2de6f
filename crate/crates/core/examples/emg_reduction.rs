//! Four synthetic subjects whose muscle activity drops by a known fraction
//! with the exosuit on. Filtering and rectification are linear in the
//! amplitude, so the pipeline should recover the reductions exactly.
//!
//! Pass a directory to also write the recordings as CSV + JSON sidecars,
//! ready for `exosuit emg analyze`.
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use exosuit::emg::{self, Condition, EmgTrace, FilterSpec};

const FS: f64 = 2000.0;
const REDUCTIONS: [f64; 4] = [7.7, 23.2, 12.9, 16.0];

fn recording(rng: &mut ChaCha8Rng, seconds: f64) -> Vec<f64> {
    let n = (seconds * FS) as usize;
    // bursts of broadband activity on a 2 s cycle, plus 50 Hz hum
    (0..n)
        .map(|i| {
            let t = i as f64 / FS;
            let burst = if t % 2.0 < 1.2 { 1.0 } else { 0.15 };
            burst * rng.gen_range(-0.5..0.5) + 0.02 * (2.0 * std::f64::consts::PI * 50.0 * t).sin()
        })
        .collect()
}

fn trace(samples: Vec<f64>, condition: Condition) -> EmgTrace {
    let cycles = (0..5).map(|k| (k * 4000, (k + 1) * 4000)).collect();
    EmgTrace { fs: FS, samples, condition, cycle_marks: cycles }
}

fn write(dir: &Path, name: &str, tr: &EmgTrace) -> std::io::Result<()> {
    let mut csv = String::from("t_s,emg_mv\n");
    for (i, x) in tr.samples.iter().enumerate() {
        csv += &format!("{:.4},{x:.6}\n", i as f64 / FS);
    }
    std::fs::write(dir.join(format!("{name}.csv")), csv)?;
    let cycles: Vec<[f64; 2]> = tr.cycle_marks.iter().map(|&(s, e)| [s as f64 / FS, e as f64 / FS]).collect();
    let side = serde_json::json!({ "fs_hz": FS, "condition": tr.condition, "cycles": cycles });
    std::fs::write(dir.join(format!("{name}.json")), side.to_string())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args().nth(1);
    let spec = FilterSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut subjects = Vec::new();

    for (k, r) in REDUCTIONS.iter().enumerate() {
        let base = recording(&mut rng, 10.0);
        let without = trace(base.clone(), Condition::WithoutExosuit);
        let with = trace(base.iter().map(|x| x * (1.0 - r / 100.0)).collect(), Condition::WithExosuit);
        let name = format!("subject{}", k + 1);
        if let Some(dir) = &out_dir {
            let dir = Path::new(dir);
            std::fs::create_dir_all(dir)?;
            write(dir, &format!("{name}_without"), &without)?;
            write(dir, &format!("{name}_with"), &with)?;
        }
        subjects.push(emg::analyze_subject(&name, &without, &with, &spec)?);
    }

    let report = emg::build_report(subjects, None)?;
    print!("{}", report.summary());
    Ok(())
}

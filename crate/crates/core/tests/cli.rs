use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exosuit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exosuit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn torque_at_star_point() {
    let o = exosuit(&["torque", "--n", "4", "--d-mm", "32", "--p-kpa", "100", "--theta-deg", "80"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "8.77 N·m");

    let o = exosuit(&["torque", "--n", "4", "--d-mm", "32", "--p-kpa", "50", "--theta-deg", "80"]);
    assert_eq!(stdout(&o).trim(), "4.39 N·m");
}

#[test]
fn torque_rejects_straight_angle_and_bad_flags() {
    let o = exosuit(&["torque", "--p-kpa", "100", "--theta-deg", "180"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("180"));
    assert_eq!(exosuit(&["torque", "--p-kpa", "abc", "--theta-deg", "80"]).status.code(), Some(2));
}

#[test]
fn torque_surface_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let o = exosuit(&[
        "torque", "--p-kpa", "100", "--theta-deg", "80", "--surface", path.to_str().unwrap(),
        "--p-max-kpa", "100", "--p-steps", "2", "--theta-max-deg", "80", "--theta-steps", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p_kpa,theta_deg,torque_nm");
    assert_eq!(lines.len(), 5);
    assert!(lines.last().unwrap().starts_with("100"), "{text}");
    assert!(lines.last().unwrap().contains("8.77"), "{text}");
}

#[test]
fn torque_against_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    fs::write(&m, "theta_deg,p_kpa,torque_nm\n80,100,9.1\n").unwrap();
    let o = exosuit(&["torque", "--p-kpa", "100", "--theta-deg", "80", "--measured", m.to_str().unwrap()]);
    assert!(stdout(&o).contains("3.6%"), "{}", stdout(&o));

    fs::write(&m, "theta_deg,p_kpa,torque_nm\n80,100,9.1\n40,oops,1\n").unwrap();
    let o = exosuit(&["torque", "--p-kpa", "100", "--theta-deg", "80", "--measured", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
}

#[test]
fn design_writes_candidates_and_front() {
    let dir = tempfile::tempdir().unwrap();
    let (out, front) = (dir.path().join("c.csv"), dir.path().join("f.csv"));
    let o = exosuit(&["design", "--out", out.to_str().unwrap(), "--front", front.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n,d_mm,torque_nm,profile_mm,stress_area_mm2,feasible,on_front\n"));
    assert_eq!(text.lines().count(), 511);
    assert!(text.lines().any(|l| l.starts_with("4,32.000,8.7713,32.000,")));
    let front = fs::read_to_string(&front).unwrap();
    assert!(front.lines().skip(1).all(|l| l.ends_with(",true,true")));

    // same inputs, same bytes
    let again = dir.path().join("c2.csv");
    exosuit(&["design", "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn design_config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("d.json");
    fs::write(&cfg, "{\n  \"p_design_kpa\": 100,\n  \"n_maximum\": 3\n}\n").unwrap();
    let o = exosuit(&["design", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n_maximum") && err.contains("line 3"), "{err}");
}

#[test]
fn calibrate_then_fill() {
    let dir = tempfile::tempdir().unwrap();
    let valve = dir.path().join("valve.json");
    let v = valve.to_str().unwrap();
    assert_eq!(exosuit(&["sim", "calibrate", "--target-kpa", "100", "--time-s", "0.5", "--out", v]).status.code(), Some(0));

    let o = exosuit(&["sim", "fill", "--target-kpa", "100", "--valve", v, "--report-response-time"]);
    let t: f64 = stdout(&o).trim().trim_start_matches("response time ").trim_end_matches(" s").parse().unwrap();
    assert!((t - 0.50).abs() <= 0.02, "{t}");

    let o = exosuit(&["sim", "fill", "--target-kpa", "60", "--initial-kpa", "60", "--valve", v, "--report-response-time"]);
    assert_eq!(stdout(&o).trim(), "response time 0.000 s");

    let o = exosuit(&["sim", "fill", "--target-kpa", "100", "--valve", v, "--dt-s", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn vent_trace_decays() {
    let o = exosuit(&["sim", "vent", "--initial-kpa", "100", "--sink-kpa", "-40", "--t-max-s", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let p: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(p[0], 100.0);
    assert!(p.windows(2).all(|w| w[1] <= w[0]));
    assert!(*p.last().unwrap() < 0.0);
}

fn posture_csv(path: &Path) {
    let mut s = String::from("t_s,thigh_angle_deg\n");
    for i in 0..400 {
        let t = i as f64 * 0.01;
        let a = if t < 1.0 { 5.0 } else { (5.0 + 80.0 * (t - 1.0)).min(85.0) };
        s += &format!("{t:.2},{a:.3}\n");
    }
    fs::write(path, s).unwrap();
}

#[test]
fn ctrl_run_logs_one_assist_interval() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("imu.csv");
    posture_csv(&trace);
    let o = exosuit(&["ctrl", "run", "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t_s,phase,sv1,sv2,hold_cmd_kpa"));
    // onset crosses 20 deg at 1.1875 s, confirmed 0.1 s later; 70 deg at 1.8125 s
    assert!(text.contains("1.2875,assisting,1,0,120.0"), "{text}");
    assert!(text.contains("1.9125,venting,0,1,120.0"), "{text}");
    assert!(text.lines().all(|l| !l.contains(",1,1,")));
    assert!(text.trim_end().ends_with("3.9900,idle,0,0,0.0"), "{text}");
}

fn emg_pair(dir: &Path, name: &str, reduction_pct: f64, rng: &mut ChaCha8Rng) -> (String, String) {
    let samples: Vec<f64> = (0..8000).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut paths = Vec::new();
    for (cond, k) in [("without_exosuit", 1.0), ("with_exosuit", 1.0 - reduction_pct / 100.0)] {
        let stem = dir.join(format!("{name}_{cond}"));
        let mut csv = String::from("t_s,emg_mv\n");
        for (i, x) in samples.iter().enumerate() {
            csv += &format!("{},{}\n", i as f64 / 2000.0, x * k);
        }
        fs::write(stem.with_extension("csv"), csv).unwrap();
        fs::write(
            stem.with_extension("json"),
            format!(r#"{{"fs_hz": 2000, "condition": "{cond}", "cycles": [[0.5, 1.5], [1.5, 2.5], [2.5, 3.5]]}}"#),
        )
        .unwrap();
        paths.push(stem.with_extension("csv").to_str().unwrap().to_string());
    }
    (paths[0].clone(), paths[1].clone())
}

#[test]
fn emg_analyze_recovers_average_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut args: Vec<String> = vec!["emg".into(), "analyze".into()];
    for (i, r) in [7.7, 23.2, 12.9, 16.0].iter().enumerate() {
        let (wo, w) = emg_pair(dir.path(), &format!("s{i}"), *r, &mut rng);
        args.extend(["--without".into(), wo, "--with".into(), w]);
    }
    let quest = dir.path().join("quest.json");
    fs::write(&quest, r#"{"respondents": [[4,4,4,4,4,4,4,4],[5,5,5,5,4,4,4,4]]}"#).unwrap();
    let report = dir.path().join("report.json");
    args.extend(["--quest".into(), quest.to_str().unwrap().into(), "--out".into(), report.to_str().unwrap().into()]);

    let o = exosuit(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("average reduction 14.95%"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert!((json["average_pct"].as_f64().unwrap() - 14.95).abs() < 1e-9);
    assert_eq!(json["quest_total"].as_f64(), Some(4.25));
}

#[test]
fn emg_rejects_low_sample_rate() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (wo, w) = emg_pair(dir.path(), "s", 10.0, &mut rng);
    let side = Path::new(&wo).with_extension("json");
    let text = fs::read_to_string(&side).unwrap().replace("2000", "500");
    fs::write(&side, text).unwrap();
    let o = exosuit(&["emg", "analyze", "--without", &wo, "--with", &w]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_paper_and_negative_control() {
    let o = exosuit(&["validate", "paper"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("FAIL"));

    let o = exosuit(&["validate", "paper", "--json"]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["passed"], true);

    let o = exosuit(&["validate", "paper", "--perturb-torque", "1.05"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exosuit::config::{self, ToolkitConfig};
use exosuit::controller;
use exosuit::design::{self, DesignConstraints, DesignConstraintsFile};
use exosuit::emg;
use exosuit::error::{Error, Result};
use exosuit::pneumatic::{self, FillScenario, ValveModel, VentScenario};
use exosuit::torque::{self, ActuatorGeometry, OperatingPoint};
use exosuit::units::{deg_to_rad, kpa_to_pa, mm_to_m};
use exosuit::validate::{self, ValidationOptions};

/// Zone-inflated pneumatic exosuit toolkit. Flags use kPa, mm and degrees.
#[derive(Parser)]
#[command(name = "exosuit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict assist torque, optionally exporting a pressure x angle surface.
    Torque(TorqueArgs),
    /// Sweep (n, d) designs and mark the Pareto front of feasible candidates.
    Design(DesignArgs),
    /// Inflation dynamics of the inflation-deflation zone.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Sit-to-stand controller replay.
    #[command(subcommand)]
    Ctrl(CtrlCommand),
    /// Surface EMG evaluation.
    #[command(subcommand)]
    Emg(EmgCommand),
    /// Run the reference checks; exits 1 if any fails.
    #[command(subcommand)]
    Validate(ValidateCommand),
}

#[derive(Args)]
struct TorqueArgs {
    #[arg(long, default_value_t = 4)]
    n: u32,
    #[arg(long, default_value_t = 32.0)]
    d_mm: f64,
    #[arg(long, default_value_t = 60.0)]
    l_dz_mm: f64,
    #[arg(long)]
    p_kpa: f64,
    #[arg(long)]
    theta_deg: f64,
    /// Write a `p_kpa,theta_deg,torque_nm` grid from 0 to the maxima below.
    #[arg(long)]
    surface: Option<PathBuf>,
    #[arg(long, default_value_t = 120.0)]
    p_max_kpa: f64,
    #[arg(long, default_value_t = 13)]
    p_steps: usize,
    #[arg(long, default_value_t = 90.0)]
    theta_max_deg: f64,
    #[arg(long, default_value_t = 10)]
    theta_steps: usize,
    /// Compare against measured `theta_deg,p_kpa,torque_nm` points.
    #[arg(long)]
    measured: Option<PathBuf>,
}

#[derive(Args)]
struct DesignArgs {
    /// Design constraints JSON; the bundled sweep when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Candidates CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pareto-front CSV.
    #[arg(long)]
    front: Option<PathBuf>,
}

#[derive(Args)]
struct PlantArgs {
    /// Toolkit config JSON; the bundled one when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Calibrated valve JSON; calibrated from the config anchor when omitted.
    #[arg(long)]
    valve: Option<PathBuf>,
    #[arg(long)]
    dt_s: Option<f64>,
    #[arg(long)]
    t_max_s: Option<f64>,
    /// Trace CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimCommand {
    Fill {
        #[arg(long)]
        target_kpa: f64,
        #[arg(long, default_value_t = 0.0)]
        initial_kpa: f64,
        #[arg(long, default_value_t = 0.10)]
        band: f64,
        /// Print the time to settle within the band.
        #[arg(long)]
        report_response_time: bool,
        #[command(flatten)]
        plant: PlantArgs,
    },
    Vent {
        #[arg(long)]
        initial_kpa: f64,
        /// Sink pressure; negative for a vacuum pump.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        sink_kpa: f64,
        #[command(flatten)]
        plant: PlantArgs,
    },
    Calibrate {
        #[arg(long)]
        target_kpa: Option<f64>,
        #[arg(long)]
        time_s: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Valve JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CtrlCommand {
    Run {
        /// IMU trace `t_s,thigh_angle_deg`.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Command log CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EmgCommand {
    Analyze {
        /// Without-exosuit recording, one per subject, paired in order with --with.
        #[arg(long = "without", required = true)]
        without: Vec<PathBuf>,
        #[arg(long = "with", required = true)]
        with: Vec<PathBuf>,
        /// QUEST sheets `{"respondents": [[...8 scores], ...]}`.
        #[arg(long)]
        quest: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Forward-backward filtering (doubles the effective order).
        #[arg(long)]
        zero_phase: bool,
        /// Report JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ValidateCommand {
    Paper {
        #[arg(long)]
        json: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Multiply every computed torque (negative control).
        #[arg(long, default_value_t = 1.0)]
        perturb_torque: f64,
    },
}

enum Outcome {
    Done,
    ValidationFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Torque(args) => cmd_torque(args),
        Command::Design(args) => cmd_design(args),
        Command::Sim(cmd) => cmd_sim(cmd),
        Command::Ctrl(CtrlCommand::Run { trace, config, out }) => {
            let cfg = load_config(config.as_deref())?;
            let file = File::open(&trace).map_err(|e| Error::io(&trace, e))?;
            let samples = controller::read_posture_csv(file, &trace)?;
            let log = controller::run_session(&samples, &cfg.controller)?;
            controller::write_log_csv(output(out.as_deref())?, &log)?;
            Ok(Outcome::Done)
        }
        Command::Emg(EmgCommand::Analyze {
            without,
            with,
            quest,
            config,
            zero_phase,
            out,
        }) => cmd_emg(&without, &with, quest.as_deref(), config.as_deref(), zero_phase, out.as_deref()),
        Command::Validate(ValidateCommand::Paper {
            json,
            config,
            perturb_torque,
        }) => {
            let cfg = load_config(config.as_deref())?;
            let report = validate::validate_paper(
                &cfg,
                &ValidationOptions {
                    torque_scale: perturb_torque,
                },
            );
            if json {
                print!("{}", report.to_json()?);
            } else {
                print!("{}", report.render_table());
            }
            Ok(if report.passed {
                Outcome::Done
            } else {
                Outcome::ValidationFailed
            })
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ToolkitConfig> {
    match path {
        Some(p) => ToolkitConfig::load(p),
        None => Ok(ToolkitConfig::knee_default()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_torque(a: TorqueArgs) -> Result<Outcome> {
    let geom = ActuatorGeometry::new(a.n, mm_to_m(a.d_mm), mm_to_m(a.l_dz_mm))?;
    let op = OperatingPoint::new(kpa_to_pa(a.p_kpa), deg_to_rad(a.theta_deg))?;
    let t = torque::predict_torque(&geom, &op)?;
    println!("{t:.2} N·m");
    if !torque::is_feasible(&geom, op.theta)? {
        log::warn!(
            "zone length {} mm does not clear the {:.1} mm needed for {} degrees",
            a.l_dz_mm,
            torque::min_dz_length(geom.d, op.theta)? * 1e3,
            a.theta_deg
        );
    }
    if let Some(path) = a.surface {
        let p_grid = torque::linspace(0.0, kpa_to_pa(a.p_max_kpa), a.p_steps);
        let theta_grid = torque::linspace(0.0, deg_to_rad(a.theta_max_deg), a.theta_steps);
        let surface = torque::torque_surface(&geom, &p_grid, &theta_grid)?;
        torque::write_surface_csv(output(Some(&path))?, &p_grid, &theta_grid, &surface)?;
    }
    if let Some(path) = a.measured {
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let points = torque::read_measured_csv(file, &path)?;
        for (m, predicted, err) in torque::compare_measurements(&geom, &points)? {
            println!(
                "theta {:6.1} deg  p {:6.1} kPa  measured {:6.2}  predicted {:6.2} N·m  error {:5.1}%",
                m.theta.to_degrees(),
                m.p * 1e-3,
                m.torque_measured,
                predicted,
                err * 100.0
            );
        }
    }
    Ok(Outcome::Done)
}

fn cmd_design(a: DesignArgs) -> Result<Outcome> {
    let constraints: DesignConstraints = match &a.config {
        Some(p) => config::load_json::<DesignConstraintsFile>(p)?.into(),
        None => ToolkitConfig::knee_default().design,
    };
    let all = design::enumerate_designs(&constraints)?;
    let admissible = design::filter_feasible(&all, &constraints);
    let front = design::pareto_front(&admissible);
    design::write_candidates_csv(output(a.out.as_deref())?, &all, &front)?;
    if let Some(p) = a.front {
        design::write_candidates_csv(output(Some(&p))?, &front, &front)?;
    }
    Ok(Outcome::Done)
}

fn plant_valve(args: &PlantArgs, cfg: &ToolkitConfig) -> Result<ValveModel> {
    match &args.valve {
        Some(p) => {
            let v: ValveModel = config::load_json(p)?;
            v.validate()?;
            Ok(v)
        }
        None => {
            log::info!("no --valve given, calibrating against the configured anchor");
            pneumatic::calibrate_conductance(
                cfg.plant.anchor_target,
                cfg.plant.anchor_time,
                &cfg.plant.chamber,
                &cfg.plant.valve,
            )
        }
    }
}

fn cmd_sim(cmd: SimCommand) -> Result<Outcome> {
    match cmd {
        SimCommand::Fill {
            target_kpa,
            initial_kpa,
            band,
            report_response_time,
            plant,
        } => {
            let cfg = load_config(plant.config.as_deref())?;
            let valve = plant_valve(&plant, &cfg)?;
            let scenario = FillScenario {
                supply_pressure: kpa_to_pa(target_kpa),
                initial_pressure: kpa_to_pa(initial_kpa),
                band,
            };
            let trace = pneumatic::simulate_fill(
                &scenario,
                &cfg.plant.chamber,
                &valve,
                plant.dt_s.unwrap_or(cfg.plant.dt),
                plant.t_max_s.unwrap_or(cfg.plant.t_max),
            )?;
            if report_response_time {
                let t = pneumatic::response_time(&trace, scenario.supply_pressure, band)?;
                println!("response time {t:.3} s");
                if let Some(p) = &plant.out {
                    trace.write_csv(output(Some(p))?)?;
                }
            } else {
                trace.write_csv(output(plant.out.as_deref())?)?;
            }
        }
        SimCommand::Vent {
            initial_kpa,
            sink_kpa,
            plant,
        } => {
            let cfg = load_config(plant.config.as_deref())?;
            let valve = plant_valve(&plant, &cfg)?;
            let scenario = VentScenario {
                initial_pressure: kpa_to_pa(initial_kpa),
                sink_pressure: kpa_to_pa(sink_kpa),
            };
            let trace = pneumatic::simulate_vent(
                &scenario,
                &cfg.plant.chamber,
                &valve,
                plant.dt_s.unwrap_or(cfg.plant.dt),
                plant.t_max_s.unwrap_or(cfg.plant.t_max),
            )?;
            trace.write_csv(output(plant.out.as_deref())?)?;
        }
        SimCommand::Calibrate {
            target_kpa,
            time_s,
            config,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let target = target_kpa.map_or(cfg.plant.anchor_target, kpa_to_pa);
            let time = time_s.unwrap_or(cfg.plant.anchor_time);
            let valve = pneumatic::calibrate_conductance(target, time, &cfg.plant.chamber, &cfg.plant.valve)?;
            match out {
                Some(p) => {
                    config::write_json(&p, &valve)?;
                    println!("sonic conductance {:.6e} m^3/(s·Pa)", valve.sonic_conductance);
                }
                None => println!("{}", serde_json::to_string_pretty(&valve)?),
            }
        }
    }
    Ok(Outcome::Done)
}

fn cmd_emg(
    without: &[PathBuf],
    with: &[PathBuf],
    quest: Option<&Path>,
    config: Option<&Path>,
    zero_phase: bool,
    out: Option<&Path>,
) -> Result<Outcome> {
    if without.len() != with.len() {
        return Err(Error::Domain(format!(
            "{} --without recordings but {} --with recordings",
            without.len(),
            with.len()
        )));
    }
    let cfg = load_config(config)?;
    let spec = emg::FilterSpec {
        zero_phase: zero_phase || cfg.emg.zero_phase,
        ..cfg.emg
    };
    let mut subjects = Vec::new();
    for (i, (wo, w)) in without.iter().zip(with).enumerate() {
        let name = format!("subject{}", i + 1);
        subjects.push(emg::analyze_subject(&name, &emg::read_emg(wo)?, &emg::read_emg(w)?, &spec)?);
    }
    let sheets = quest.map(emg::read_quest).transpose()?;
    let report = emg::build_report(subjects, sheets.as_deref())?;
    match out {
        Some(p) => {
            std::fs::write(p, report.to_json()?).map_err(|e| Error::io(p, e))?;
            print!("{}", report.summary());
        }
        None => {
            print!("{}", report.to_json()?);
            eprint!("{}", report.summary());
        }
    }
    Ok(Outcome::Done)
}

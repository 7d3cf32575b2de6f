//! Venting to atmosphere versus venting into a vacuum pump.
use exosuit::config::ToolkitConfig;
use exosuit::pneumatic::{self, VentScenario};
use exosuit::units::kpa_to_pa;

fn main() -> exosuit::error::Result<()> {
    let plant = ToolkitConfig::knee_default().plant;
    let valve = pneumatic::calibrate_conductance(plant.anchor_target, plant.anchor_time, &plant.chamber, &plant.valve)?;

    for sink_kpa in [0.0, -30.0, -60.0] {
        let scenario = VentScenario {
            initial_pressure: kpa_to_pa(100.0),
            sink_pressure: kpa_to_pa(sink_kpa),
        };
        let trace = pneumatic::simulate_vent(&scenario, &plant.chamber, &valve, plant.dt, plant.t_max)?;
        // time to drop below 10 kPa gauge
        let t = trace
            .samples
            .iter()
            .position(|&p| p < kpa_to_pa(10.0))
            .map(|i| trace.time(i));
        match t {
            Some(t) => println!("sink {sink_kpa:>4.0} kPa: below 10 kPa after {t:.3} s"),
            None => println!("sink {sink_kpa:>4.0} kPa: still above 10 kPa at {:.1} s", plant.t_max),
        }
    }
    Ok(())
}

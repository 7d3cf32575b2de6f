//! Calibrate the valve to one measured fill, then predict the others.
use exosuit::config::ToolkitConfig;
use exosuit::pneumatic::{self, FillScenario};
use exosuit::units::kpa_to_pa;

fn main() -> exosuit::error::Result<()> {
    let cfg = ToolkitConfig::knee_default();
    let plant = cfg.plant;
    println!("chamber volume {:.1} cm3", plant.chamber.volume * 1e6);

    // 0 -> 100 kPa took 0.5 s on the bench
    let valve = pneumatic::calibrate_conductance(kpa_to_pa(100.0), 0.5, &plant.chamber, &plant.valve)?;
    println!("sonic conductance {:.3e} m3/(s·Pa)", valve.sonic_conductance);
    println!("stable for dt < {:.4} s", valve.stability_bound(&plant.chamber));

    for kpa in [100.0, 80.0, 60.0, 40.0] {
        let scenario = FillScenario::to_target(kpa_to_pa(kpa));
        let trace = pneumatic::simulate_fill(&scenario, &plant.chamber, &valve, plant.dt, plant.t_max)?;
        let t = pneumatic::response_time(&trace, scenario.supply_pressure, scenario.band)?;
        println!("0 -> {kpa:>3.0} kPa  {t:.3} s");
    }
    Ok(())
}

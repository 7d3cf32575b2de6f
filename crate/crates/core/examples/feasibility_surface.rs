//! Torque over a pressure x bending-angle grid, written as CSV.
//!
//!     cargo run --example feasibility_surface -- surface.csv
use std::io;

use exosuit::torque::{self, ActuatorGeometry};
use exosuit::units::{deg_to_rad, kpa_to_pa};

fn main() -> exosuit::error::Result<()> {
    let geom = ActuatorGeometry::knee_default();
    let p_grid = torque::linspace(0.0, kpa_to_pa(100.0), 11);
    let theta_grid = torque::linspace(0.0, deg_to_rad(90.0), 10);
    let surface = torque::torque_surface(&geom, &p_grid, &theta_grid)?;

    match std::env::args().nth(1) {
        Some(path) => {
            let file = std::fs::File::create(&path).map_err(|e| exosuit::error::Error::io(&path, e))?;
            torque::write_surface_csv(file, &p_grid, &theta_grid, &surface)?;
            eprintln!("wrote {path}");
        }
        None => torque::write_surface_csv(io::stdout(), &p_grid, &theta_grid, &surface)?,
    }

    // the zone has to be long enough for the largest bend
    eprintln!("max angle for a {:.0} mm zone:", geom.l_dz * 1e3);
    for &theta in &theta_grid {
        let ok = torque::is_feasible(&geom, theta)?;
        eprintln!("  {:5.1} deg  {}", theta.to_degrees(), if ok { "feasible" } else { "zone too short" });
    }
    Ok(())
}

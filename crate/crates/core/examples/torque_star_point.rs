//! Torque of the built knee actuator at its design point, plus the inverse
//! problem: what pressure gives a requested torque.
use exosuit::torque::{self, ActuatorGeometry, OperatingPoint};
use exosuit::units::{deg_to_rad, kpa_to_pa, pa_to_kpa};

fn main() -> exosuit::error::Result<()> {
    let geom = ActuatorGeometry::knee_default();
    let op = OperatingPoint::new(kpa_to_pa(100.0), deg_to_rad(80.0))?;

    let pred = torque::prediction(&geom, &op)?;
    println!("n = {}, d = {} mm, p = 100 kPa, theta = 80 deg", geom.n, geom.d * 1e3);
    println!("torque             {:.2} N·m", pred.torque);

    let l_min = torque::min_dz_length(geom.d, op.theta)?;
    println!(
        "zone length        {:.1} mm available, {:.1} mm needed -> {}",
        geom.l_dz * 1e3,
        l_min * 1e3,
        if torque::is_feasible(&geom, op.theta)? { "ok" } else { "too short" }
    );

    for target in [4.0, 8.77, 10.0] {
        let p = torque::required_pressure(target, &geom, op.theta)?;
        println!("{target:5.2} N·m needs   {:.1} kPa", pa_to_kpa(p));
    }

    // the bench measured 9.1 N·m at the same point
    let err = torque::relative_model_error(pred.torque, 9.1)?;
    println!("model error vs 9.1 N·m measured: {:.1}%", err * 100.0);
    Ok(())
}

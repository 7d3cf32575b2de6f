//! Sweep actuator count and diameter, keep the feasible designs and print
//! the Pareto front (torque up, profile down, stress area up).
use exosuit::design::{self, DesignConstraints};
use exosuit::units::{m2_to_mm2, m_to_mm};

fn main() -> exosuit::error::Result<()> {
    let constraints = DesignConstraints::default();
    let all = design::enumerate_designs(&constraints)?;
    let feasible = design::filter_feasible(&all, &constraints);
    let front = design::pareto_front(&feasible);
    println!("{} candidates, {} feasible, {} on the front", all.len(), feasible.len(), front.len());

    println!("{:>3} {:>6} {:>9} {:>10}", "n", "d mm", "T N·m", "area mm2");
    for c in front.iter().filter(|c| c.torque > 5.0 && c.torque < 15.0) {
        println!("{:>3} {:>6.0} {:>9.2} {:>10.0}", c.n, m_to_mm(c.d), c.torque, m2_to_mm2(c.stress_area));
    }

    let star = all.iter().find(|c| c.n == 4 && (c.d - 0.032).abs() < 1e-9).expect("on grid");
    println!(
        "\nbuilt design: n=4 d=32 mm  {:.2} N·m  {:.0} mm2  feasible={}",
        star.torque,
        m2_to_mm2(star.stress_area),
        star.feasible
    );
    // with all three objectives weighted equally, a few neighbours beat it
    for c in feasible.iter().filter(|c| design::dominates(c, star)).take(3) {
        println!("  dominated by n={} d={:.0} mm ({:.2} N·m)", c.n, m_to_mm(c.d), c.torque);
    }
    Ok(())
}

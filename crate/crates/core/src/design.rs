//! Grid sweep over actuator count and diameter with a three-objective Pareto
//! filter (torque up, profile down, stress area up).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torque::{self, ActuatorGeometry, OperatingPoint};
use crate::units;

/// Design sweep settings. SI units; see [`DesignConstraintsFile`] for the
/// on-disk form.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignConstraints {
    pub p_design: f64,
    pub theta_design: f64,
    pub torque_min: f64,
    pub profile_max: f64,
    /// Inclusive actuator-count range.
    pub n_range: (u32, u32),
    /// Inclusive diameter range and step, meters.
    pub d_range: (f64, f64),
    pub d_step: f64,
    /// Contact-strip length used by [`stress_area`].
    pub contact_length: f64,
    /// Joint-span length available for the inflation-deflation zone. A
    /// candidate is feasible when this exceeds its minimum zone length.
    pub l_dz_available: f64,
}

impl Default for DesignConstraints {
    fn default() -> Self {
        DesignConstraints {
            p_design: 100_000.0,
            theta_design: 80f64.to_radians(),
            torque_min: 0.0,
            profile_max: 0.060,
            n_range: (1, 10),
            d_range: (0.010, 0.060),
            d_step: 0.001,
            contact_length: 0.011_72,
            l_dz_available: 0.060,
        }
    }
}

impl DesignConstraints {
    pub fn validate(&self) -> Result<()> {
        let (n_lo, n_hi) = self.n_range;
        if n_lo < 1 || n_hi < n_lo {
            return Err(Error::EmptyRange(format!("actuator count range {n_lo}..={n_hi}")));
        }
        let (d_lo, d_hi) = self.d_range;
        if !(d_lo > 0.0 && d_hi >= d_lo && d_hi.is_finite()) {
            return Err(Error::EmptyRange(format!("diameter range {d_lo}..={d_hi} m")));
        }
        if !(self.d_step > 0.0 && self.d_step.is_finite()) {
            return Err(Error::EmptyRange(format!("diameter step {} m", self.d_step)));
        }
        if !(self.torque_min >= 0.0) {
            return Err(Error::domain("torque_min must be non-negative"));
        }
        if !(self.profile_max > 0.0) {
            return Err(Error::domain("profile_max must be positive"));
        }
        if !(self.contact_length >= 0.0 && self.contact_length.is_finite()) {
            return Err(Error::domain("contact_length must be finite and non-negative"));
        }
        if !(self.l_dz_available > 0.0) {
            return Err(Error::domain("l_dz_available must be positive"));
        }
        OperatingPoint::new(self.p_design, self.theta_design)?;
        Ok(())
    }

    /// Diameters on the grid, ascending. Built from an integer step count so
    /// that e.g. 10 mm + 22 × 1 mm lands on 32 mm exactly.
    pub fn diameters(&self) -> Vec<f64> {
        let (lo, hi) = self.d_range;
        let steps = ((hi - lo) / self.d_step + 1e-9).floor() as usize;
        (0..=steps).map(|k| lo + k as f64 * self.d_step).collect()
    }
}

/// JSON form of [`DesignConstraints`] in boundary units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConstraintsFile {
    pub p_design_kpa: f64,
    pub theta_design_deg: f64,
    #[serde(default)]
    pub torque_min_nm: f64,
    pub profile_max_mm: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub d_min_mm: f64,
    pub d_max_mm: f64,
    pub d_step_mm: f64,
    pub contact_length_mm: f64,
    pub l_dz_available_mm: f64,
}

impl Default for DesignConstraintsFile {
    fn default() -> Self {
        DesignConstraints::default().into()
    }
}

impl From<DesignConstraintsFile> for DesignConstraints {
    fn from(f: DesignConstraintsFile) -> Self {
        let mm = |x: f64| units::mm_to_m(x);
        DesignConstraints {
            p_design: units::kpa_to_pa(f.p_design_kpa),
            theta_design: units::deg_to_rad(f.theta_design_deg),
            torque_min: f.torque_min_nm,
            profile_max: mm(f.profile_max_mm),
            n_range: (f.n_min, f.n_max),
            d_range: (mm(f.d_min_mm), mm(f.d_max_mm)),
            d_step: mm(f.d_step_mm),
            contact_length: mm(f.contact_length_mm),
            l_dz_available: mm(f.l_dz_available_mm),
        }
    }
}

impl From<DesignConstraints> for DesignConstraintsFile {
    fn from(c: DesignConstraints) -> Self {
        DesignConstraintsFile {
            p_design_kpa: units::pa_to_kpa(c.p_design),
            theta_design_deg: units::rad_to_deg(c.theta_design),
            torque_min_nm: c.torque_min,
            profile_max_mm: units::m_to_mm(c.profile_max),
            n_min: c.n_range.0,
            n_max: c.n_range.1,
            d_min_mm: units::m_to_mm(c.d_range.0),
            d_max_mm: units::m_to_mm(c.d_range.1),
            d_step_mm: units::m_to_mm(c.d_step),
            contact_length_mm: units::m_to_mm(c.contact_length),
            l_dz_available_mm: units::m_to_mm(c.l_dz_available),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignCandidate {
    pub n: u32,
    pub d: f64,
    pub torque: f64,
    /// Radial height added to the limb; equal to `d`.
    pub profile: f64,
    pub stress_area: f64,
    pub feasible: bool,
    pub l_dz_min: f64,
}

/// Projected contact-strip area `n * d * contact_length`, m².
pub fn stress_area(n: u32, d: f64, contact_length: f64) -> f64 {
    f64::from(n) * d * contact_length
}

/// One candidate per grid point, ordered by ascending `n` then `d`.
pub fn enumerate_designs(constraints: &DesignConstraints) -> Result<Vec<DesignCandidate>> {
    constraints.validate()?;
    let op = OperatingPoint::new(constraints.p_design, constraints.theta_design)?;
    let diameters = constraints.diameters();
    let (n_lo, n_hi) = constraints.n_range;
    let mut out = Vec::with_capacity((n_hi - n_lo + 1) as usize * diameters.len());
    for n in n_lo..=n_hi {
        for &d in &diameters {
            let geom = ActuatorGeometry {
                n,
                d,
                l_dz: constraints.l_dz_available,
                l_hold_upper: 0.0,
                l_hold_lower: 0.0,
            };
            let l_dz_min = torque::min_dz_length(d, constraints.theta_design)?;
            out.push(DesignCandidate {
                n,
                d,
                torque: torque::predict_torque(&geom, &op)?,
                profile: d,
                stress_area: stress_area(n, d, constraints.contact_length),
                feasible: constraints.l_dz_available > l_dz_min,
                l_dz_min,
            });
        }
    }
    Ok(out)
}

/// `a` dominates `b`: no worse on every objective, strictly better on one.
pub fn dominates(a: &DesignCandidate, b: &DesignCandidate) -> bool {
    let no_worse = a.torque >= b.torque && a.profile <= b.profile && a.stress_area >= b.stress_area;
    let better = a.torque > b.torque || a.profile < b.profile || a.stress_area > b.stress_area;
    no_worse && better
}

/// Non-dominated subset in input order. Exact duplicates are all kept.
pub fn pareto_front(candidates: &[DesignCandidate]) -> Vec<DesignCandidate> {
    // Sort indices by torque descending; a candidate can only be dominated by
    // one with torque at least as high, so each scan only looks backwards
    // through the current front.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| {
        candidates[j]
            .torque
            .total_cmp(&candidates[i].torque)
            .then(candidates[i].profile.total_cmp(&candidates[j].profile))
            .then(candidates[j].stress_area.total_cmp(&candidates[i].stress_area))
    });
    let mut on_front = vec![false; candidates.len()];
    let mut front: Vec<usize> = Vec::new();
    for &i in &order {
        let c = &candidates[i];
        if !front.iter().any(|&f| dominates(&candidates[f], c)) {
            front.push(i);
            on_front[i] = true;
        }
    }
    candidates
        .iter()
        .zip(on_front)
        .filter_map(|(c, keep)| keep.then_some(*c))
        .collect()
}

/// Feasible candidates meeting the torque floor and profile ceiling.
pub fn filter_feasible(candidates: &[DesignCandidate], constraints: &DesignConstraints) -> Vec<DesignCandidate> {
    candidates
        .iter()
        .filter(|c| c.feasible && c.torque >= constraints.torque_min && c.profile <= constraints.profile_max)
        .copied()
        .collect()
}

/// Writes `n,d_mm,torque_nm,profile_mm,stress_area_mm2,feasible,on_front`.
pub fn write_candidates_csv<W: Write>(out: W, candidates: &[DesignCandidate], front: &[DesignCandidate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "d_mm", "torque_nm", "profile_mm", "stress_area_mm2", "feasible", "on_front"])?;
    for c in candidates {
        let on_front = front.iter().any(|f| f.n == c.n && f.d == c.d);
        w.write_record([
            c.n.to_string(),
            format!("{:.3}", units::m_to_mm(c.d)),
            format!("{:.4}", c.torque),
            format!("{:.3}", units::m_to_mm(c.profile)),
            format!("{:.2}", units::m2_to_mm2(c.stress_area)),
            c.feasible.to_string(),
            on_front.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<candidates>", e))?;
    Ok(())
}

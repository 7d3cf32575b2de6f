//! Conversions between the boundary units used in files and flags
//! (kPa, mm, degrees) and the SI units used everywhere else.

/// Standard atmosphere, Pa absolute.
pub const ATMOSPHERE_PA: f64 = 101_325.0;

pub fn kpa_to_pa(kpa: f64) -> f64 {
    kpa * 1e3
}

pub fn pa_to_kpa(pa: f64) -> f64 {
    pa * 1e-3
}

pub fn mm_to_m(mm: f64) -> f64 {
    mm * 1e-3
}

pub fn m_to_mm(m: f64) -> f64 {
    m * 1e3
}

pub fn mm2_to_m2(mm2: f64) -> f64 {
    mm2 * 1e-6
}

pub fn m2_to_mm2(m2: f64) -> f64 {
    m2 * 1e6
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}

pub fn gauge_to_absolute(gauge_pa: f64) -> f64 {
    gauge_pa + ATMOSPHERE_PA
}

pub fn absolute_to_gauge(abs_pa: f64) -> f64 {
    abs_pa - ATMOSPHERE_PA
}

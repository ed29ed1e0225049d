//! Orbital sunlight/shadow geometry, solar charging and battery bookkeeping.
//!
//! Orbital position is a single rotation angle measured from the midpoint of
//! the shadowed arc; the satellite is sunlit when `|θ_rot| >= θ_0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Trapezoid panels used by [`solar_energy`].
pub const SOLAR_QUAD_STEPS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    /// Earth radius, m.
    pub r_e: f64,
    /// Orbit altitude, m.
    pub h_s: f64,
    /// Angle between the orbital plane and the sunlight, rad.
    pub phi_sun: f64,
    /// Rotation rate, rad/s.
    pub omega_dot: f64,
}

impl OrbitParams {
    pub fn validate(&self) -> Result<()> {
        if self.r_e > 0.0 && self.h_s > 0.0 && self.omega_dot > 0.0 && self.phi_sun.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("orbit params out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarParams {
    /// Panel conversion efficiency.
    pub eta_s: f64,
    /// Light intensity, W/m².
    pub psi: f64,
    /// Panel area, m².
    pub b: f64,
}

impl SolarParams {
    pub fn validate(&self) -> Result<()> {
        if self.eta_s > 0.0 && self.eta_s <= 1.0 && self.psi > 0.0 && self.b > 0.0 {
            Ok(())
        } else {
            Err(invalid(format!("solar params out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Sun,
    Shadow,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Sun => "sun",
            Phase::Shadow => "shadow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    /// Stored energy, J, in `[0, capacity]`.
    pub energy: f64,
    /// Capacity, J.
    pub capacity: f64,
    /// Orbital rotation angle in `[-π, π)`.
    pub theta_rot: f64,
}

impl BatteryState {
    pub fn full(capacity: f64, theta_rot: f64) -> Self {
        Self { energy: capacity, capacity, theta_rot: wrap_angle(theta_rot) }
    }

    pub fn fraction(&self) -> f64 {
        if self.capacity > 0.0 {
            self.energy / self.capacity
        } else {
            0.0
        }
    }
}

/// Result of one battery update; `raw` is the unclamped energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    pub state: BatteryState,
    pub raw: f64,
}

/// Wrap an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        -PI
    } else {
        t
    }
}

/// Half-angle of the shadowed arc.
///
/// The closed-form argument is dimensional (metres) and saturates almost
/// everywhere below the geometric threshold; it is clamped to `[0, 1]`, so a
/// negative argument means no shadow.
pub fn shadow_half_angle(op: &OrbitParams) -> f64 {
    let (re, h, phi) = (op.r_e, op.h_s, op.phi_sun);
    let threshold = (re / (re + h)).asin();
    if phi > threshold {
        return 0.0;
    }
    let (s, c) = phi.sin_cos();
    let arg = (re * re * c * c - (2.0 * re * h + h * h) * s * s) / ((re + h) * c);
    if arg.is_nan() {
        return 0.0;
    }
    arg.clamp(-1.0, 1.0).asin()
}

pub fn phase_of(theta_rot: f64, theta_0: f64) -> Phase {
    if theta_rot.abs() >= theta_0 {
        Phase::Sun
    } else {
        Phase::Shadow
    }
}

/// Remaining sunlit time before entering the shadow, s.
pub fn time_to_shadow(theta_rot: f64, theta_0: f64, op: &OrbitParams) -> Result<f64> {
    if phase_of(theta_rot, theta_0) != Phase::Sun {
        return Err(Error::Precondition(format!(
            "time_to_shadow called in shadow (theta_rot={theta_rot}, theta_0={theta_0})"
        )));
    }
    let angle = if theta_rot >= 0.0 { 2.0 * PI - theta_0 - theta_rot } else { -theta_0 - theta_rot };
    Ok(angle / op.omega_dot)
}

/// Remaining shadowed time before re-entering sunlight, s.
pub fn time_to_sun(theta_rot: f64, theta_0: f64, op: &OrbitParams) -> Result<f64> {
    if phase_of(theta_rot, theta_0) != Phase::Shadow {
        return Err(Error::Precondition(format!(
            "time_to_sun called in sunlight (theta_rot={theta_rot}, theta_0={theta_0})"
        )));
    }
    Ok((theta_0 - theta_rot) / op.omega_dot)
}

/// Remaining time in the current phase plus the full length of the next one.
pub fn cycle_time(theta_rot: f64, theta_0: f64, op: &OrbitParams) -> f64 {
    match phase_of(theta_rot, theta_0) {
        Phase::Sun => time_to_shadow(theta_rot, theta_0, op).unwrap_or(0.0) + 2.0 * theta_0 / op.omega_dot,
        Phase::Shadow => time_to_sun(theta_rot, theta_0, op).unwrap_or(0.0) + (2.0 * PI - 2.0 * theta_0) / op.omega_dot,
    }
}

/// Solar energy collected over `[t, t + delta]`, trapezoid rule.
pub fn solar_energy(t: f64, delta: f64, sp: &SolarParams, op: &OrbitParams, theta_rot_fn: impl Fn(f64) -> f64) -> f64 {
    if !(delta > 0.0) {
        return 0.0;
    }
    let cos_phi_sq = op.phi_sun.cos().powi(2);
    let peak = sp.eta_s * sp.psi * sp.b;
    let integrand = |tau: f64| {
        let c = theta_rot_fn(tau).cos();
        peak * (1.0 - cos_phi_sq * c * c).max(0.0).sqrt()
    };
    let n = SOLAR_QUAD_STEPS;
    let h = delta / n as f64;
    let mut acc = 0.5 * (integrand(t) + integrand(t + delta));
    for i in 1..n {
        acc += integrand(t + i as f64 * h);
    }
    acc * h
}

pub fn charging_power(e_sol: f64, t_sun: f64) -> Result<f64> {
    if !(t_sun > 0.0) {
        return Err(invalid(format!("sunlit duration must be > 0, got {t_sun}")));
    }
    Ok(e_sol / t_sun)
}

/// Advance the battery by `duration` seconds at the given power flows.
#[allow(clippy::too_many_arguments)]
pub fn battery_step(
    bs: &BatteryState,
    p_in: f64,
    p_harvest_sum: f64,
    p_ris: f64,
    p_tr: f64,
    p_cons: f64,
    phase: Phase,
    duration: f64,
) -> BatteryStep {
    let charge = if phase == Phase::Sun { p_in } else { 0.0 };
    let net = charge + p_harvest_sum - p_ris - (p_tr + p_cons);
    let raw = bs.energy + net * duration;
    BatteryStep { state: BatteryState { energy: raw.min(bs.capacity).max(0.0), ..*bs }, raw }
}

/// Net energy drawn over `t_total`; negative when harvesting dominates.
pub fn total_energy(p_ris: f64, p_tr: f64, p_cons: f64, p_harvest_sum: f64, t_total: f64) -> f64 {
    (p_ris + p_tr + p_cons - p_harvest_sum) * t_total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_orbit(phi_sun: f64) -> OrbitParams {
        OrbitParams { r_e: 6.378e6, h_s: 1.0e6, phi_sun, omega_dot: 7.29e-5 }
    }

    #[test]
    fn shadow_half_angle_cases() {
        let threshold = (6378.0f64 / 7378.0).asin();
        assert!((threshold - 1.044079).abs() < 1e-6);
        assert_eq!(shadow_half_angle(&table_orbit(70f64.to_radians())), 0.0);
        assert_eq!(shadow_half_angle(&table_orbit(threshold + 1e-9)), 0.0);

        // At phi = 0 the argument is R_e²/(R_e+h) metres, saturating at 1.
        let arg: f64 = 6.378e6f64.powi(2) / 7.378e6;
        assert!(arg > 1.0);
        assert_eq!(shadow_half_angle(&table_orbit(0.0)), PI / 2.0);
    }

    #[test]
    fn shadow_half_angle_is_continuous_near_threshold() {
        // The argument's zero crossing coincides with the asin threshold.
        let re: f64 = 6.378e6;
        let h: f64 = 1.0e6;
        let crossing = (re / (2.0 * re * h + h * h).sqrt()).atan();
        let threshold = (re / (re + h)).asin();
        assert!((crossing - threshold).abs() < 1e-12);

        // The argument carries units of metres, so it falls from 1 to 0
        // within ~1e-7 rad of the threshold; sweep that band finely.
        let start = threshold - 2e-7;
        assert_eq!(shadow_half_angle(&table_orbit(start)), PI / 2.0);
        let mut prev = PI / 2.0;
        let mut phi = start;
        while phi < threshold + 1e-9 {
            let v = shadow_half_angle(&table_orbit(phi));
            assert!(v <= prev + 1e-12);
            assert!(prev - v < 0.06, "jump at {phi}: {prev} -> {v}");
            assert!(v >= -1e-6, "{phi} {v}");
            prev = v;
            phi += 1e-10;
        }
        assert_eq!(prev, 0.0);
        assert!(shadow_half_angle(&table_orbit(threshold - 1e-12)) < 1e-4);
    }

    #[test]
    fn phase_cases() {
        assert_eq!(phase_of(0.0, 0.0), Phase::Sun);
        assert_eq!(phase_of(0.5, 0.0), Phase::Sun);
        assert_eq!(phase_of(0.0, 0.3), Phase::Shadow);
        assert_eq!(phase_of(0.3, 0.3), Phase::Sun);
        assert_eq!(phase_of(-0.3, 0.3), Phase::Sun);
    }

    #[test]
    fn sun_and_shadow_durations() {
        let op = table_orbit(0.0);
        let t = time_to_shadow(-PI, PI / 4.0, &op).unwrap();
        assert!((t - 0.75 * PI / 7.29e-5).abs() < 1e-6);
        let t = time_to_shadow(0.0, 0.0, &op).unwrap();
        assert!((t - 2.0 * PI / 7.29e-5).abs() < 1e-6);
        let t = time_to_shadow(0.0, 1.0, &op);
        assert!(t.is_err());
        let t = time_to_shadow(1.5, 1.0, &op).unwrap();
        assert!((t - (2.0 * PI - 1.0 - 1.5) / 7.29e-5).abs() < 1e-6);

        assert!((time_to_sun(0.0, 1.0, &op).unwrap() - 1.0 / 7.29e-5).abs() < 1e-9);
        assert!(time_to_sun(1.0 - 1e-12, 1.0, &op).unwrap() < 1e-6);
        let near = time_to_sun(-1.0 + 1e-12, 1.0, &op).unwrap();
        assert!((near - 2.0 / 7.29e-5).abs() < 1e-6);
        assert!(time_to_sun(2.0, 1.0, &op).is_err());
    }

    #[test]
    fn solar_energy_cases() {
        let sp = SolarParams { eta_s: 0.19, psi: 500.0, b: 4.0 };
        let e = solar_energy(0.0, 60.0, &sp, &table_orbit(PI / 2.0), |t| 0.3 + 1e-3 * t);
        assert!((e - 22_800.0).abs() < 1e-8);
        let e0 = solar_energy(0.0, 60.0, &sp, &table_orbit(0.0), |_| 0.0);
        assert_eq!(e0, 0.0);
        let e1 = solar_energy(10.0, 600.0, &sp, &table_orbit(0.7), |t| 2.0 + 7.29e-5 * t);
        assert!(e1 > 0.0 && e1 < 0.19 * 500.0 * 4.0 * 600.0);
    }

    #[test]
    fn charging_power_cases() {
        assert_eq!(charging_power(100.0, 10.0).unwrap(), 10.0);
        assert_eq!(charging_power(0.0, 10.0).unwrap(), 0.0);
        assert!(charging_power(1.0, 0.0).is_err());
    }

    #[test]
    fn battery_step_cases() {
        let bs = BatteryState { energy: 100.0, capacity: 9e4, theta_rot: 0.0 };
        let same = battery_step(&bs, 0.0, 5.0, 2.0, 1.0, 2.0, Phase::Shadow, 60.0);
        assert_eq!(same.state.energy, 100.0);

        let full = battery_step(&bs, 1e9, 0.0, 0.0, 0.0, 0.0, Phase::Sun, 60.0);
        assert_eq!(full.state.energy, 9e4);
        let no_sun = battery_step(&bs, 1e9, 0.0, 0.0, 0.0, 0.0, Phase::Shadow, 60.0);
        assert_eq!(no_sun.state.energy, 100.0);

        let drain = battery_step(&bs, 0.0, 0.0, 0.0, 1.0, 0.0, Phase::Sun, 60.0);
        assert_eq!(drain.state.energy, 40.0);
        assert_eq!(drain.raw, 40.0);

        let deplete = battery_step(&bs, 0.0, 0.0, 0.0, 1.0, 1.0, Phase::Sun, 60.0);
        assert_eq!(deplete.state.energy, 0.0);
        assert_eq!(deplete.raw, -20.0);
    }

    #[test]
    fn total_energy_cases() {
        assert_eq!(total_energy(0.0, 0.0, 0.0, 0.0, 100.0), 0.0);
        assert_eq!(total_energy(0.0, 10.0, 0.0, 0.0, 100.0), 1000.0);
        assert!(total_energy(0.0, 0.0, 0.0, 1.0, 100.0) < 0.0);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(-PI), -PI);
    }

    proptest! {
        #[test]
        fn boundary_reached_after_phase_duration(theta in -PI..PI, theta_0 in 0.0f64..(PI / 2.0)) {
            let op = table_orbit(0.0);
            let (t, target) = match phase_of(theta, theta_0) {
                Phase::Sun => (time_to_shadow(theta, theta_0, &op).unwrap(), -theta_0),
                Phase::Shadow => (time_to_sun(theta, theta_0, &op).unwrap(), theta_0),
            };
            prop_assert!(t >= 0.0);
            let landed = theta + op.omega_dot * t;
            let diff = wrap_angle(landed - target);
            prop_assert!(diff.abs() < 1e-9);
        }

        #[test]
        fn battery_stays_in_range(
            e in 0.0f64..9e4, p_in in 0.0f64..500.0, h in 0.0f64..1.0,
            ris in 0.0f64..50.0, tr in 0.0f64..50.0, dur in 0.0f64..600.0, sun in any::<bool>()
        ) {
            let bs = BatteryState { energy: e, capacity: 9e4, theta_rot: 0.0 };
            let phase = if sun { Phase::Sun } else { Phase::Shadow };
            let s = battery_step(&bs, p_in, h, ris, tr, 90.0, phase, dur);
            prop_assert!(s.state.energy >= 0.0 && s.state.energy <= 9e4);
            if s.raw < 0.0 { prop_assert_eq!(s.state.energy, 0.0); }
        }
    }
}

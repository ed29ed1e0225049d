//! Multi-agent environment: one agent per LEO satellite and its surface.
//!
//! Each slot the agents pick surface coefficients and downlink beamformers;
//! the environment evaluates rates, surface and battery energy flows, and
//! returns the penalized energy-efficiency reward per agent.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{
    self, combined_channel, los_matrix, rician, rician_vector, steering_vector, ChannelParams, ChannelRealization,
    InterferenceMode, SteeringAngles, SteeringMode,
};
use crate::energy::{
    self, battery_step, charging_power, cycle_time, phase_of, shadow_half_angle, solar_energy, time_to_shadow,
    total_energy, wrap_angle, BatteryState, OrbitParams, Phase, SolarParams,
};
use crate::error::{check_dim, invalid, Result};
use crate::mfris::{
    config_diagonal, harvested_power, rf_power_with_noise, ris_output_power, ris_power_consumption, HarvestParams,
    MfRisConfig, QuantLevels, RisPowerParams,
};
use crate::numerics::{mix_seed, sample_cgauss, CMatrix, CVector, SeededRng, C64, ZERO};

/// Surface capability ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    /// Harvest split pinned to `Scenario::fixed_eh_alpha`.
    FixedEh,
    /// Pure signal mode, `α = 1`.
    NoEh,
    /// Gain capped at unity, `β <= 1`.
    NoAmplify,
    /// No surface at all.
    NoRis,
}

impl Ablation {
    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::FixedEh => "fixed_eh",
            Ablation::NoEh => "no_eh",
            Ablation::NoAmplify => "no_amplify",
            Ablation::NoRis => "no_ris",
        }
    }
}

/// Scenario description. Link distances to users are divided by
/// `distance_scale` before pathloss; the LEO-to-surface mount distance is in
/// metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub num_leo: usize,
    pub num_users: usize,
    pub num_antennas: usize,
    pub m_h: usize,
    pub m_v: usize,

    pub h0_db: f64,
    pub k0: f64,
    pub rician_db: f64,
    pub wavelength: f64,
    pub element_spacing: f64,
    pub noise_dbm: f64,
    pub ris_noise_dbm: f64,
    pub distance_scale: f64,
    pub interference_mode: InterferenceMode,

    pub ris_distance: f64,
    pub mount_angles: SteeringAngles,

    pub pass_half_width: f64,
    pub leo_spacing: f64,
    pub user_radius: f64,
    pub layout_seed: u64,
    /// Explicit user positions `[x, y, z]` in metres; generated when empty.
    pub user_positions: Vec<[f64; 3]>,

    pub earth_radius: f64,
    pub altitude: f64,
    pub sun_angle: f64,
    pub omega_dot: f64,
    pub solar_efficiency: f64,
    pub light_intensity: f64,
    pub panel_area: f64,
    pub battery_capacity: f64,

    pub harvest_max: f64,
    pub harvest_steepness: f64,
    pub harvest_threshold: f64,
    pub p_pin: f64,
    pub p_conv: f64,
    pub xi: f64,
    pub beta_max: f64,
    pub levels: QuantLevels,
    pub quantize_actions: bool,

    /// LEO circuit power `P^cons`, W.
    pub p_cons: f64,
    /// LEO power budget `P^b_o`, W.
    pub p_budget: f64,
    pub r_min: f64,
    pub rho: [f64; 4],
    /// Slot length, s.
    pub delta: f64,
    pub element_on_fraction: f64,
    pub ablation: Ablation,
    pub fixed_eh_alpha: f64,
    /// Multiplier applied to bits/J before it enters rewards and metrics.
    pub ee_scale: f64,
    /// Floor on the per-slot energy used as the EE denominator, J.
    pub energy_floor: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            num_leo: 2,
            num_users: 4,
            num_antennas: 4,
            m_h: 4,
            m_v: 4,
            h0_db: -20.0,
            k0: 2.2,
            rician_db: 3.0,
            wavelength: 0.1,
            element_spacing: 0.05,
            noise_dbm: -70.0,
            ris_noise_dbm: -70.0,
            distance_scale: 1e5,
            interference_mode: InterferenceMode::AsWritten,
            ris_distance: 2.0,
            mount_angles: SteeringAngles { phi_r: PI / 3.0, theta_r: PI / 4.0, phi_t: PI / 6.0, theta_t: PI / 3.0 },
            pass_half_width: 1.0e6,
            leo_spacing: 6.0e5,
            user_radius: 3.0e5,
            layout_seed: 0,
            user_positions: Vec::new(),
            earth_radius: 6.378e6,
            altitude: 1.0e6,
            sun_angle: 0.5,
            omega_dot: 7.29e-5,
            solar_efficiency: 0.19,
            light_intensity: 500.0,
            panel_area: 4.0,
            battery_capacity: 9.0e4,
            harvest_max: 0.024,
            harvest_steepness: 150.0,
            harvest_threshold: 0.014,
            p_pin: 0.33e-3,
            p_conv: 10.0,
            xi: 1.1,
            beta_max: 4.0,
            levels: QuantLevels { alpha: 2, beta: 10, theta: 8 },
            quantize_actions: false,
            p_cons: 90.0,
            p_budget: 120.0,
            r_min: 0.5,
            rho: [1.0, 10.0, 10.0, 0.01],
            delta: 60.0,
            element_on_fraction: 1.0,
            ablation: Ablation::Full,
            fixed_eh_alpha: 0.5,
            ee_scale: 1e9,
            energy_floor: 1.0,
        }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl Scenario {
    pub fn num_elements(&self) -> usize {
        self.m_h * self.m_v
    }

    /// `2·N·K` channel reals plus battery fraction and phase flag.
    pub fn state_dim(&self) -> usize {
        2 * self.num_antennas * self.num_users + 2
    }

    /// `3·M` surface reals plus `2·N·K` beamformer reals.
    pub fn action_dim(&self) -> usize {
        3 * self.num_elements() + 2 * self.num_antennas * self.num_users
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            h0: db_to_linear(self.h0_db),
            k0: self.k0,
            beta0: db_to_linear(self.rician_db),
            lambda: self.wavelength,
            d_elem: self.element_spacing,
        }
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn ris_power_params(&self) -> RisPowerParams {
        RisPowerParams {
            p_pin: self.p_pin,
            p_c: self.p_conv,
            xi: self.xi,
            sigma_m_sq: dbm_to_watts(self.ris_noise_dbm),
        }
    }

    pub fn harvest_params(&self) -> Result<HarvestParams> {
        HarvestParams::new(self.harvest_max, self.harvest_steepness, self.harvest_threshold)
    }

    pub fn orbit_params(&self) -> OrbitParams {
        OrbitParams { r_e: self.earth_radius, h_s: self.altitude, phi_sun: self.sun_angle, omega_dot: self.omega_dot }
    }

    pub fn solar_params(&self) -> SolarParams {
        SolarParams { eta_s: self.solar_efficiency, psi: self.light_intensity, b: self.panel_area }
    }

    /// Transmit power left for beamforming once circuit power is paid.
    pub fn available_tx_power(&self) -> f64 {
        (self.p_budget - self.p_cons).max(0.0)
    }

    /// Serving LEO of user `k` (static round-robin).
    pub fn serving_leo(&self, k: usize) -> usize {
        k % self.num_leo.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_leo == 0 || self.num_users == 0 || self.num_antennas == 0 {
            return Err(invalid("num_leo, num_users and num_antennas must be >= 1"));
        }
        if self.m_h == 0 || self.m_v == 0 {
            return Err(invalid("m_h and m_v must be >= 1"));
        }
        self.channel_params().validate()?;
        self.ris_power_params().validate()?;
        self.harvest_params()?;
        self.orbit_params().validate()?;
        self.solar_params().validate()?;
        self.levels.diodes_per_element()?;
        let positive = [
            ("distance_scale", self.distance_scale),
            ("ris_distance", self.ris_distance),
            ("battery_capacity", self.battery_capacity),
            ("beta_max", self.beta_max),
            ("delta", self.delta),
            ("ee_scale", self.ee_scale),
            ("energy_floor", self.energy_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.element_on_fraction > 0.0 && self.element_on_fraction <= 1.0) {
            return Err(invalid(format!("element_on_fraction must be in (0, 1], got {}", self.element_on_fraction)));
        }
        if !(0.0..=1.0).contains(&self.fixed_eh_alpha) {
            return Err(invalid("fixed_eh_alpha must be in [0, 1]"));
        }
        if self.rho.iter().any(|r| !(*r >= 0.0)) {
            return Err(invalid("penalty weights must be >= 0"));
        }
        if !self.user_positions.is_empty() {
            check_dim("user positions", self.num_users, self.user_positions.len())?;
        }
        if self.p_cons < 0.0 || self.p_budget < 0.0 || self.r_min < 0.0 {
            return Err(invalid("p_cons, p_budget and r_min must be >= 0"));
        }
        Ok(())
    }

    /// Cross-track offset of LEO `l`'s ground track.
    fn track_offset(&self, l: usize) -> f64 {
        (l as f64 - (self.num_leo as f64 - 1.0) / 2.0) * self.leo_spacing
    }

    /// User positions: explicit, or scattered around their serving LEO's track.
    pub fn resolved_user_positions(&self) -> Vec<[f64; 3]> {
        if !self.user_positions.is_empty() {
            return self.user_positions.clone();
        }
        let mut rng = SeededRng::new(mix_seed(self.layout_seed, 0x05E5));
        (0..self.num_users)
            .map(|k| {
                let r = self.user_radius * rng.uniform().sqrt();
                let a = rng.uniform_range(0.0, 2.0 * PI);
                [r * a.cos(), self.track_offset(self.serving_leo(k)) + r * a.sin(), 0.0]
            })
            .collect()
    }

    /// Per-LEO element on/off masks, fixed by the layout seed.
    pub fn element_masks(&self) -> Vec<Vec<bool>> {
        let m = self.num_elements();
        let on = ((self.element_on_fraction * m as f64).round() as usize).clamp(1, m);
        let mut rng = SeededRng::new(mix_seed(self.layout_seed, 0xE1E));
        (0..self.num_leo)
            .map(|_| {
                let mut idx: Vec<usize> = (0..m).collect();
                for i in (1..m).rev() {
                    idx.swap(i, rng.below(i + 1));
                }
                let mut mask = vec![false; m];
                for &i in &idx[..on] {
                    mask[i] = true;
                }
                mask
            })
            .collect()
    }
}

/// Observation of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState(pub Vec<f64>);

impl AgentState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Decoded, feasible action of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentAction {
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// One beamformer per user, length `N`.
    pub w: Vec<CVector>,
}

impl AgentAction {
    pub fn tx_power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_sq()).sum()
    }

    fn surface(&self, sc: &Scenario, enabled: Vec<bool>) -> MfRisConfig {
        MfRisConfig {
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            theta: self.theta.clone(),
            enabled,
            beta_max: sc.beta_max,
            levels: sc.levels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub ee: f64,
    pub c: [f64; 4],
    pub reward: f64,
}

impl RewardBreakdown {
    pub fn new(ee: f64, c: [f64; 4], rho: &[f64; 4]) -> Self {
        let penalty: f64 = rho.iter().zip(&c).map(|(r, c)| r * c).sum();
        Self { ee, c, reward: ee - penalty }
    }
}

/// Raw per-agent quantities of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentMetrics {
    pub rates: Vec<f64>,
    pub rate_sum: f64,
    pub p_tr: f64,
    pub p_out: f64,
    pub p_ris: f64,
    pub p_harvest: f64,
    pub p_in: f64,
    pub battery: f64,
    pub battery_raw: f64,
    pub e_tot: f64,
    pub cycle_time: f64,
    pub phase: Phase,
    pub theta_rot: f64,
    /// `Σ_k |g_{l,k}|²` on this slot's channel.
    pub channel_quality: f64,
    /// Penalty terms before the hinge.
    pub c_raw: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    pub slot: usize,
    pub agents: Vec<AgentMetrics>,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub states: Vec<AgentState>,
    pub rewards: Vec<RewardBreakdown>,
    pub metrics: SlotMetrics,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn apply_ablation(a: &mut AgentAction, sc: &Scenario) {
    match sc.ablation {
        Ablation::Full => {}
        Ablation::FixedEh => a.alpha.iter_mut().for_each(|x| *x = sc.fixed_eh_alpha),
        Ablation::NoEh => a.alpha.iter_mut().for_each(|x| *x = 1.0),
        Ablation::NoAmplify => a.beta.iter_mut().for_each(|x| *x = x.min(1.0)),
        Ablation::NoRis => {
            a.alpha.iter_mut().for_each(|x| *x = 1.0);
            a.beta.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

fn project_power(w: &mut [CVector], p_avail: f64) {
    let total: f64 = w.iter().map(|v| v.norm_sq()).sum();
    if total > p_avail {
        let s = if total > 0.0 { (p_avail / total).sqrt() } else { 0.0 };
        for v in w.iter_mut() {
            *v = v.scale(C64::new(s, 0.0));
        }
    }
}

fn quantize_surface(a: &mut AgentAction, sc: &Scenario) {
    let q = MfRisConfig {
        alpha: a.alpha.clone(),
        beta: a.beta.clone(),
        theta: a.theta.clone(),
        enabled: vec![true; a.alpha.len()],
        beta_max: sc.beta_max,
        levels: sc.levels,
    }
    .quantized();
    a.alpha = q.alpha;
    a.beta = q.beta;
    a.theta = q.theta;
}

/// Map an unconstrained actor output onto the feasible action set.
pub fn decode_action(raw: &[f64], sc: &Scenario) -> Result<AgentAction> {
    check_dim("raw action", sc.action_dim(), raw.len())?;
    let m = sc.num_elements();
    let (n, k) = (sc.num_antennas, sc.num_users);
    let two_pi = 2.0 * PI;
    let theta = raw[..m]
        .iter()
        .map(|&x| {
            let t = PI * (x.tanh() + 1.0);
            if t >= two_pi {
                0.0
            } else {
                t
            }
        })
        .collect();
    let alpha = raw[m..2 * m].iter().map(|&x| logistic(x)).collect();
    let beta = raw[2 * m..3 * m].iter().map(|&x| sc.beta_max * logistic(x)).collect();
    let wr = &raw[3 * m..];
    let mut w: Vec<CVector> = (0..k)
        .map(|u| CVector((0..n).map(|i| C64::new(wr[2 * (u * n + i)], wr[2 * (u * n + i) + 1])).collect()))
        .collect();
    project_power(&mut w, sc.available_tx_power());
    let mut action = AgentAction { theta, alpha, beta, w };
    if sc.quantize_actions {
        quantize_surface(&mut action, sc);
    }
    apply_ablation(&mut action, sc);
    Ok(action)
}

/// Uniformly random feasible action (baseline policy).
pub fn random_action(sc: &Scenario, rng: &mut SeededRng) -> AgentAction {
    let m = sc.num_elements();
    let theta = (0..m).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect();
    let alpha = (0..m).map(|_| rng.uniform()).collect();
    let beta = (0..m).map(|_| rng.uniform_range(0.0, sc.beta_max)).collect();
    let mut w: Vec<CVector> =
        (0..sc.num_users).map(|_| CVector((0..sc.num_antennas).map(|_| rng.cgauss(1.0)).collect())).collect();
    let total: f64 = w.iter().map(|v| v.norm_sq()).sum();
    let target = rng.uniform() * sc.available_tx_power();
    if total > 0.0 {
        let s = (target / total).sqrt();
        for v in w.iter_mut() {
            *v = v.scale(C64::new(s, 0.0));
        }
    }
    let mut action = AgentAction { theta, alpha, beta, w };
    if sc.quantize_actions {
        quantize_surface(&mut action, sc);
    }
    apply_ablation(&mut action, sc);
    action
}

/// Hinged constraint violations `(rate, self-sustainability, power budget, battery)`.
#[allow(clippy::too_many_arguments)]
pub fn penalties(
    rates: &[f64],
    r_min: f64,
    p_ris: f64,
    p_harvest_sum: f64,
    p_tr: f64,
    p_cons: f64,
    p_budget: f64,
    battery_raw: f64,
) -> [f64; 4] {
    raw_penalties(rates, r_min, p_ris, p_harvest_sum, p_tr, p_cons, p_budget, battery_raw).map(|c| c.max(0.0))
}

#[allow(clippy::too_many_arguments)]
fn raw_penalties(
    rates: &[f64],
    r_min: f64,
    p_ris: f64,
    p_harvest_sum: f64,
    p_tr: f64,
    p_cons: f64,
    p_budget: f64,
    battery_raw: f64,
) -> [f64; 4] {
    [rates.iter().map(|r| r_min - r).sum(), p_ris - p_harvest_sum, p_tr + p_cons - p_budget, -battery_raw]
}

/// Straight-line geometry of one link: `(off-nadir angle, azimuth, distance)`.
fn link_geometry(from: [f64; 3], to: [f64; 3]) -> (f64, f64, f64) {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let phi = (-d[2] / dist).clamp(-1.0, 1.0).acos();
    let theta = d[1].atan2(d[0]);
    (phi, theta, dist)
}

/// The multi-agent environment. Owned by one execution stream.
#[derive(Debug, Clone)]
pub struct Env {
    sc: Scenario,
    params: ChannelParams,
    harvest: HarvestParams,
    ris_power: RisPowerParams,
    orbit: OrbitParams,
    solar: SolarParams,
    theta_0: f64,
    sigma_sq: f64,
    state_scale: f64,
    users: Vec<[f64; 3]>,
    masks: Vec<Vec<bool>>,
    mount_los: CMatrix,

    channel_rng: SeededRng,
    noise_rng: SeededRng,
    time: f64,
    slot: usize,
    batteries: Vec<BatteryState>,
    surfaces: Vec<MfRisConfig>,
    channels: Option<ChannelRealization>,
}

impl Env {
    pub fn new(sc: Scenario) -> Result<Self> {
        sc.validate()?;
        let params = sc.channel_params();
        let mount_los = los_matrix(sc.m_h, sc.m_v, sc.num_antennas, &sc.mount_angles, &params)?;
        let orbit = sc.orbit_params();
        let nadir = sc.altitude / sc.distance_scale;
        let neutral = MfRisConfig::uniform(sc.num_elements(), 0.5, sc.beta_max / 2.0, PI, sc.beta_max, sc.levels);
        let masks = sc.element_masks();
        Ok(Self {
            params,
            harvest: sc.harvest_params()?,
            ris_power: sc.ris_power_params(),
            orbit,
            solar: sc.solar_params(),
            theta_0: shadow_half_angle(&orbit),
            sigma_sq: sc.noise_power(),
            state_scale: 1.0 / params.pathloss(nadir).sqrt(),
            users: sc.resolved_user_positions(),
            surfaces: masks.iter().map(|mask| MfRisConfig { enabled: mask.clone(), ..neutral.clone() }).collect(),
            masks,
            mount_los,
            channel_rng: SeededRng::new(0),
            noise_rng: SeededRng::new(0),
            time: 0.0,
            slot: 0,
            batteries: Vec::new(),
            channels: None,
            sc,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.sc
    }

    pub fn shadow_half_angle(&self) -> f64 {
        self.theta_0
    }

    pub fn batteries(&self) -> &[BatteryState] {
        &self.batteries
    }

    pub fn channels(&self) -> Option<&ChannelRealization> {
        self.channels.as_ref()
    }

    pub fn user_positions(&self) -> &[[f64; 3]] {
        &self.users
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    /// Start an episode: full batteries, evenly spaced orbital angles with a
    /// seeded common offset, fresh channels.
    pub fn reset(&mut self, seed: u64) -> Vec<AgentState> {
        let root = SeededRng::new(seed);
        self.channel_rng = root.derive(1);
        self.noise_rng = root.derive(2);
        let mut start = root.derive(3);
        let l_count = self.sc.num_leo;
        let offset = start.uniform_range(0.0, 2.0 * PI / l_count as f64);
        self.batteries = (0..l_count)
            .map(|l| {
                let th = -PI + offset + 2.0 * PI * l as f64 / l_count as f64;
                BatteryState::full(self.sc.battery_capacity, th)
            })
            .collect();
        let m = self.sc.num_elements();
        for (surface, mask) in self.surfaces.iter_mut().zip(&self.masks) {
            *surface = MfRisConfig {
                enabled: mask.clone(),
                ..MfRisConfig::uniform(m, 0.5, self.sc.beta_max / 2.0, PI, self.sc.beta_max, self.sc.levels)
            };
        }
        self.time = 0.0;
        self.slot = 0;
        self.channels = Some(self.draw_channels());
        self.observe()
    }

    fn leo_position(&self, l: usize) -> [f64; 3] {
        let th = self.batteries[l].theta_rot;
        [self.sc.pass_half_width * th.sin(), self.sc.track_offset(l), self.sc.altitude]
    }

    fn draw_channels(&mut self) -> ChannelRealization {
        let (n, m) = (self.sc.num_antennas, self.sc.num_elements());
        let mut rng = self.channel_rng.clone();
        let mut leo_ris = Vec::with_capacity(self.sc.num_leo);
        let mut direct = Vec::with_capacity(self.sc.num_leo);
        let mut reflect = Vec::with_capacity(self.sc.num_leo);
        for l in 0..self.sc.num_leo {
            let pos = self.leo_position(l);
            leo_ris.push(
                rician(&self.mount_los, self.sc.ris_distance, &self.params, &mut rng)
                    .expect("validated mount distance"),
            );
            let mut dl = Vec::with_capacity(self.sc.num_users);
            let mut rl = Vec::with_capacity(self.sc.num_users);
            for u in &self.users {
                let (phi, theta, dist) = link_geometry(pos, *u);
                let d = dist / self.sc.distance_scale;
                let h_los =
                    steering_vector(n, phi, theta, &self.params, SteeringMode::SinSin).expect("positive antenna count");
                let r_los =
                    steering_vector(m, phi, theta, &self.params, SteeringMode::SinSin).expect("positive element count");
                dl.push(rician_vector(&h_los, d, &self.params, &mut rng).expect("positive distance"));
                rl.push(rician_vector(&r_los, d, &self.params, &mut rng).expect("positive distance"));
            }
            direct.push(dl);
            reflect.push(rl);
        }
        self.channel_rng = rng;
        ChannelRealization { leo_ris, direct, reflect }
    }

    fn combined(&self, ch: &ChannelRealization) -> Vec<Vec<CVector>> {
        (0..self.sc.num_leo)
            .map(|l| {
                let theta = CMatrix::diag(&config_diagonal(&self.surfaces[l]));
                (0..self.sc.num_users)
                    .map(|k| {
                        combined_channel(&ch.direct[l][k], &ch.reflect[l][k], &theta, &ch.leo_ris[l])
                            .expect("consistent dimensions")
                    })
                    .collect()
            })
            .collect()
    }

    fn observe(&self) -> Vec<AgentState> {
        let ch = self.channels.as_ref().expect("reset before observe");
        let g = self.combined(ch);
        (0..self.sc.num_leo)
            .map(|l| {
                let mut v = Vec::with_capacity(self.sc.state_dim());
                for gk in &g[l] {
                    for z in gk.iter() {
                        v.push(z.re * self.state_scale);
                        v.push(z.im * self.state_scale);
                    }
                }
                let b = &self.batteries[l];
                v.push(b.fraction());
                v.push(match phase_of(b.theta_rot, self.theta_0) {
                    Phase::Sun => 1.0,
                    Phase::Shadow => 0.0,
                });
                AgentState(v)
            })
            .collect()
    }

    /// Current combined channels `g[l][k]` under the surfaces last applied.
    pub fn combined_channels(&self) -> Vec<Vec<CVector>> {
        self.combined(self.channels.as_ref().expect("reset before use"))
    }

    fn charging(&self, theta_rot: f64) -> f64 {
        let Ok(t_sun) = time_to_shadow(theta_rot, self.theta_0, &self.orbit) else {
            return 0.0;
        };
        if t_sun <= 0.0 {
            return 0.0;
        }
        let w = self.orbit.omega_dot;
        let t0 = self.time;
        let e_sol = solar_energy(t0, t_sun, &self.solar, &self.orbit, |tau| theta_rot + w * (tau - t0));
        charging_power(e_sol, t_sun).unwrap_or(0.0)
    }

    /// Apply one slot of actions and advance the orbit.
    pub fn step(&mut self, actions: &[AgentAction]) -> Result<StepOutput> {
        let sc = &self.sc;
        check_dim("agent actions", sc.num_leo, actions.len())?;
        let (n, m, k_count) = (sc.num_antennas, sc.num_elements(), sc.num_users);
        for a in actions {
            check_dim("phase shifts", m, a.theta.len())?;
            check_dim("harvest splits", m, a.alpha.len())?;
            check_dim("amplitudes", m, a.beta.len())?;
            check_dim("beamformers", k_count, a.w.len())?;
            for w in &a.w {
                check_dim("beamformer length", n, w.len())?;
            }
        }
        let surfaces: Vec<MfRisConfig> =
            actions.iter().zip(&self.masks).map(|(a, mask)| a.surface(sc, mask.clone())).collect();
        for s in &surfaces {
            s.validate()?;
        }
        self.surfaces = surfaces;

        let ch = self.channels.take().expect("reset before step");
        let g = self.combined(&ch);
        let w_all: Vec<Vec<CVector>> = actions.iter().map(|a| a.w.clone()).collect();
        let mut w_sum = CVector::zeros(n);
        for w in w_all.iter().flatten() {
            w_sum = w_sum.add(w)?;
        }

        let no_ris = sc.ablation == crate::env::Ablation::NoRis;
        let mut rewards = Vec::with_capacity(sc.num_leo);
        let mut agents = Vec::with_capacity(sc.num_leo);
        for l in 0..sc.num_leo {
            let rates: Vec<f64> = (0..k_count)
                .map(|k| channel::sinr(&g, &w_all, self.sigma_sq, l, k, sc.interference_mode).map(channel::rate))
                .collect::<Result<_>>()?;
            let rate_sum: f64 = rates.iter().sum();
            let surface = &self.surfaces[l];

            let (p_harvest, p_out, p_ris) = if no_ris {
                (0.0, 0.0, 0.0)
            } else {
                let noise = sample_cgauss(&mut self.noise_rng, m, self.ris_power.sigma_m_sq)?;
                let mut harvest = 0.0;
                for e in 0..m {
                    let p_rf = rf_power_with_noise(e, &ch.leo_ris[l], &w_sum, surface.effective_alpha(e), noise[e])?;
                    harvest += harvested_power(p_rf, &self.harvest);
                }
                let theta = CMatrix::diag(&config_diagonal(surface));
                let p_out = ris_output_power(&theta, &ch.leo_ris[l], &w_all[l], self.ris_power.sigma_m_sq)?;
                let p_ris = ris_power_consumption(surface, p_out, &self.ris_power)?;
                (harvest, p_out, p_ris)
            };

            let p_tr = actions[l].tx_power();
            let battery = self.batteries[l];
            let phase = phase_of(battery.theta_rot, self.theta_0);
            let p_in = self.charging(battery.theta_rot);
            let stepped = battery_step(&battery, p_in, p_harvest, p_ris, p_tr, sc.p_cons, phase, sc.delta);
            let t_cycle = cycle_time(battery.theta_rot, self.theta_0, &self.orbit);
            let e_tot = total_energy(p_ris, p_tr, sc.p_cons, p_harvest, t_cycle);
            let ee = sc.ee_scale * rate_sum / e_tot.max(sc.energy_floor);
            let c_raw = raw_penalties(&rates, sc.r_min, p_ris, p_harvest, p_tr, sc.p_cons, sc.p_budget, stepped.raw);
            let c = c_raw.map(|c| c.max(0.0));
            rewards.push(RewardBreakdown::new(ee, c, &sc.rho));
            agents.push(AgentMetrics {
                rate_sum,
                rates,
                p_tr,
                p_out,
                p_ris,
                p_harvest,
                p_in: if phase == Phase::Sun { p_in } else { 0.0 },
                battery: stepped.state.energy,
                battery_raw: stepped.raw,
                e_tot,
                cycle_time: t_cycle,
                phase,
                theta_rot: battery.theta_rot,
                channel_quality: g[l].iter().map(|v| v.norm_sq()).sum(),
                c_raw,
            });
            self.batteries[l] = stepped.state;
        }

        let slot = self.slot;
        self.time += sc.delta;
        self.slot += 1;
        let advance = self.orbit.omega_dot * sc.delta;
        for b in self.batteries.iter_mut() {
            b.theta_rot = wrap_angle(b.theta_rot + advance);
        }
        self.channels = Some(self.draw_channels());
        Ok(StepOutput { states: self.observe(), rewards, metrics: SlotMetrics { slot, agents } })
    }
}

/// Zero beamformers for every agent, useful for silent-slot probes.
pub fn silent_actions(sc: &Scenario) -> Vec<AgentAction> {
    let m = sc.num_elements();
    (0..sc.num_leo)
        .map(|_| AgentAction {
            theta: vec![0.0; m],
            alpha: vec![1.0; m],
            beta: vec![1.0; m],
            w: vec![CVector(vec![ZERO; sc.num_antennas]); sc.num_users],
        })
        .collect()
}

#[doc(hidden)]
pub use energy::Phase as SlotPhase;

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Scenario {
        Scenario { num_leo: 2, num_users: 2, num_antennas: 2, m_h: 2, m_v: 2, ..Scenario::default() }
    }

    #[test]
    fn default_scenario_is_valid() {
        let sc = Scenario::default();
        sc.validate().unwrap();
        assert_eq!(sc.num_elements(), 16);
        assert_eq!(sc.state_dim(), 2 * 4 * 4 + 2);
        assert_eq!(sc.action_dim(), 48 + 32);
        assert!((sc.noise_power() - 1e-10).abs() < 1e-22);
    }

    #[test]
    fn reset_is_deterministic_and_seed_sensitive() {
        let mut env = Env::new(tiny()).unwrap();
        let a = env.reset(5);
        let b = env.reset(5);
        let c = env.reset(6);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|s| s.len() == tiny().state_dim()));

        let single = Scenario { num_leo: 1, ..tiny() };
        let mut env = Env::new(single.clone()).unwrap();
        let s = env.reset(1);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].len(), 2 * single.num_antennas * single.num_users + 2);
        assert!(env.batteries().iter().all(|b| b.energy == single.battery_capacity));
    }

    #[test]
    fn decode_zero_raw() {
        let sc = tiny();
        let a = decode_action(&vec![0.0; sc.action_dim()], &sc).unwrap();
        assert!(a.theta.iter().all(|&t| (t - PI).abs() < 1e-15));
        assert!(a.alpha.iter().all(|&x| x == 0.5));
        assert!(a.beta.iter().all(|&x| x == sc.beta_max / 2.0));
        assert_eq!(a.tx_power(), 0.0);
        assert!(decode_action(&[0.0; 3], &sc).is_err());
    }

    #[test]
    fn decode_projects_onto_power_budget() {
        let sc = tiny();
        let mut raw = vec![0.0; sc.action_dim()];
        let m = sc.num_elements();
        for x in raw[3 * m..].iter_mut() {
            *x = 1e3;
        }
        let a = decode_action(&raw, &sc).unwrap();
        let p = a.tx_power();
        assert!((p - sc.available_tx_power()).abs() <= 1e-12 * sc.available_tx_power());
    }

    #[test]
    fn decode_ablation_overrides() {
        let mut sc = tiny();
        let mut rng = SeededRng::new(3);
        let raw: Vec<f64> = (0..sc.action_dim()).map(|_| 3.0 * rng.normal()).collect();
        sc.ablation = Ablation::NoRis;
        let a = decode_action(&raw, &sc).unwrap();
        let cfg = a.surface(&sc, vec![true; sc.num_elements()]);
        assert!(config_diagonal(&cfg).iter().all(|z| *z == ZERO));
        sc.ablation = Ablation::NoEh;
        assert!(decode_action(&raw, &sc).unwrap().alpha.iter().all(|&x| x == 1.0));
        sc.ablation = Ablation::FixedEh;
        assert!(decode_action(&raw, &sc).unwrap().alpha.iter().all(|&x| x == 0.5));
        sc.ablation = Ablation::NoAmplify;
        assert!(decode_action(&raw, &sc).unwrap().beta.iter().all(|&x| x <= 1.0));
    }

    #[test]
    fn penalties_cases() {
        assert_eq!(penalties(&[1.0, 1.0], 0.5, 1.0, 2.0, 10.0, 90.0, 120.0, 5.0), [0.0; 4]);
        let c = penalties(&[0.0, 0.0], 0.5, 1.0, 2.0, 10.0, 90.0, 120.0, 5.0);
        assert_eq!(c[0], 1.0);
        let c = penalties(&[1.0, 1.0], 0.5, 1.0, 2.0, 10.0, 90.0, 120.0, -50.0);
        assert_eq!(c[3], 50.0);
        let c = penalties(&[1.0], 0.5, 5.0, 2.0, 40.0, 90.0, 120.0, 0.0);
        assert_eq!(c[1], 3.0);
        assert_eq!(c[2], 10.0);
    }

    #[test]
    fn silent_slot_is_rate_penalized() {
        let sc = tiny();
        let mut env = Env::new(sc.clone()).unwrap();
        env.reset(1);
        let out = env.step(&silent_actions(&sc)).unwrap();
        for (r, a) in out.rewards.iter().zip(&out.metrics.agents) {
            assert!(a.rates.iter().all(|&x| x == 0.0));
            assert_eq!(r.ee, 0.0);
            assert!((r.c[0] - sc.r_min * sc.num_users as f64).abs() < 1e-12);
            let penalty: f64 = sc.rho.iter().zip(&r.c).map(|(p, c)| p * c).sum();
            assert!((r.reward - (r.ee - penalty)).abs() < 1e-12);
        }
    }

    #[test]
    fn no_ris_combined_channel_is_direct_path() {
        let sc = Scenario { ablation: Ablation::NoRis, ..tiny() };
        let mut env = Env::new(sc.clone()).unwrap();
        env.reset(4);
        let mut rng = SeededRng::new(8);
        for _ in 0..5 {
            let acts: Vec<_> = (0..sc.num_leo).map(|_| random_action(&sc, &mut rng)).collect();
            env.step(&acts).unwrap();
            let ch = env.channels().unwrap().clone();
            let g = env.combined_channels();
            for l in 0..sc.num_leo {
                for k in 0..sc.num_users {
                    let h = ch.direct[l][k].conj();
                    for (a, b) in g[l][k].iter().zip(h.iter()) {
                        assert!((a - b).norm() <= 1e-12 * b.norm());
                    }
                }
            }
        }
    }
}

//! Multi-functional surface model: per-element configuration, RF energy
//! harvesting and surface power accounting.
//!
//! Each element splits its incident signal: a `1 - α` share feeds the
//! harvester and the rest is re-radiated with gain `α·√β·e^{jθ}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::numerics::{frob_norm_sq, sample_cgauss, CMatrix, CVector, SeededRng, C64};

/// Quantization levels realized by PIN diodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantLevels {
    pub alpha: u32,
    pub beta: u32,
    pub theta: u32,
}

impl QuantLevels {
    /// Diodes per element: `log2 Lα + log2 Lβ + 2·log2 Lθ`.
    pub fn diodes_per_element(&self) -> Result<f64> {
        if self.alpha < 2 || self.beta < 2 || self.theta < 2 {
            return Err(invalid(format!("quantization levels must be >= 2, got {self:?}")));
        }
        Ok((self.alpha as f64).log2() + (self.beta as f64).log2() + 2.0 * (self.theta as f64).log2())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfRisConfig {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    /// Elements switched off contribute nothing and draw no control power.
    pub enabled: Vec<bool>,
    pub beta_max: f64,
    pub levels: QuantLevels,
}

impl MfRisConfig {
    pub fn uniform(m: usize, alpha: f64, beta: f64, theta: f64, beta_max: f64, levels: QuantLevels) -> Self {
        Self {
            alpha: vec![alpha; m],
            beta: vec![beta; m],
            theta: vec![theta; m],
            enabled: vec![true; m],
            beta_max,
            levels,
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn active_elements(&self) -> usize {
        self.enabled.iter().filter(|&&e| e).count()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.alpha.len();
        check_dim("beta coefficients", m, self.beta.len())?;
        check_dim("phase shifts", m, self.theta.len())?;
        check_dim("element mask", m, self.enabled.len())?;
        if !(self.beta_max > 0.0) {
            return Err(invalid(format!("beta_max must be > 0, got {}", self.beta_max)));
        }
        for i in 0..m {
            let (a, b, t) = (self.alpha[i], self.beta[i], self.theta[i]);
            if !(0.0..=1.0).contains(&a) {
                return Err(invalid(format!("alpha[{i}] = {a} outside [0, 1]")));
            }
            if !(0.0..=self.beta_max).contains(&b) {
                return Err(invalid(format!("beta[{i}] = {b} outside [0, {}]", self.beta_max)));
            }
            if !(0.0..2.0 * PI).contains(&t) {
                return Err(invalid(format!("theta[{i}] = {t} outside [0, 2pi)")));
            }
        }
        Ok(())
    }

    /// Snap every coefficient to its PIN-diode level grid.
    pub fn quantized(&self) -> Self {
        let snap = |x: f64, lo: f64, hi: f64, levels: u32| {
            let steps = (levels.max(2) - 1) as f64;
            lo + ((x - lo) / (hi - lo) * steps).round().clamp(0.0, steps) / steps * (hi - lo)
        };
        let phase_step = 2.0 * PI / self.levels.theta.max(2) as f64;
        Self {
            alpha: self.alpha.iter().map(|&a| snap(a, 0.0, 1.0, self.levels.alpha)).collect(),
            beta: self.beta.iter().map(|&b| snap(b, 0.0, self.beta_max, self.levels.beta)).collect(),
            theta: self
                .theta
                .iter()
                .map(|&t| {
                    let k = (t / phase_step).round() as u32 % self.levels.theta.max(2);
                    k as f64 * phase_step
                })
                .collect(),
            ..self.clone()
        }
    }

    /// Effective harvesting split: disabled elements behave as `α = 1`.
    pub fn effective_alpha(&self, m: usize) -> f64 {
        if self.enabled[m] {
            self.alpha[m]
        } else {
            1.0
        }
    }
}

/// Nonlinear harvester constants. `omega` is fixed by `a` and `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestParams {
    /// Maximum harvested power, W.
    pub z: f64,
    /// Circuit steepness, 1/W.
    pub a: f64,
    /// Turn-on threshold, W.
    pub q: f64,
    pub omega: f64,
}

impl HarvestParams {
    pub fn new(z: f64, a: f64, q: f64) -> Result<Self> {
        let hp = Self { z, a, q, omega: 1.0 / (1.0 + (a * q).exp()) };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z >= 0.0 && self.a > 0.0 && self.q > 0.0) {
            return Err(invalid(format!("harvest params out of range: {self:?}")));
        }
        let expect = 1.0 / (1.0 + (self.a * self.q).exp());
        if !(self.omega > 0.0 && self.omega < 1.0) || (self.omega - expect).abs() > 1e-12 * expect {
            return Err(invalid(format!(
                "omega {} inconsistent with a={}, q={} (expected {expect})",
                self.omega, self.a, self.q
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisPowerParams {
    /// Per-diode control power, W.
    pub p_pin: f64,
    /// RF-to-DC conversion circuit power, W.
    pub p_c: f64,
    /// Inverse amplifier efficiency.
    pub xi: f64,
    /// Surface amplification noise power, W.
    pub sigma_m_sq: f64,
}

impl RisPowerParams {
    pub fn validate(&self) -> Result<()> {
        if self.p_pin >= 0.0 && self.p_c >= 0.0 && self.xi >= 0.0 && self.sigma_m_sq >= 0.0 {
            Ok(())
        } else {
            Err(invalid(format!("surface power params out of range: {self:?}")))
        }
    }
}

/// `Θ = diag(α_m·√β_m·e^{jθ_m})`.
pub fn config_matrix(cfg: &MfRisConfig) -> Result<CMatrix> {
    cfg.validate()?;
    Ok(CMatrix::diag(&config_diagonal(cfg)))
}

/// Diagonal of [`config_matrix`] without validation.
pub fn config_diagonal(cfg: &MfRisConfig) -> Vec<C64> {
    (0..cfg.len())
        .map(|m| {
            if cfg.enabled[m] {
                C64::from_polar(cfg.alpha[m] * cfg.beta[m].sqrt(), cfg.theta[m])
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Harvest selector `T_m`: zero except `1 - α_m` at `(m, m)`.
pub fn eh_matrix(m: usize, alpha_m: f64, size: usize) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&alpha_m) {
        return Err(invalid(format!("alpha = {alpha_m} outside [0, 1]")));
    }
    if m >= size {
        return Err(invalid(format!("element {m} out of range for {size} elements")));
    }
    let mut t = CMatrix::zeros(size, size);
    t[(m, m)] = C64::new(1.0 - alpha_m, 0.0);
    Ok(t)
}

/// RF power reaching element `m`'s harvester with a known noise sample.
pub fn rf_power_with_noise(m: usize, leo_ris: &CMatrix, w_sum: &CVector, alpha_m: f64, noise_m: C64) -> Result<f64> {
    check_dim("beamformer sum length", leo_ris.cols(), w_sum.len())?;
    if m >= leo_ris.rows() {
        return Err(invalid(format!("element {m} out of range for {} rows", leo_ris.rows())));
    }
    let incident: C64 = leo_ris.row(m).iter().zip(w_sum.iter()).map(|(a, b)| a * b).sum::<C64>() + noise_m;
    let split = 1.0 - alpha_m;
    Ok(split * split * incident.norm_sqr())
}

/// `‖T_m·(H·Σw + n)‖²` with a fresh noise draw of per-entry power `σ_m²`.
pub fn received_rf_power(
    m: usize,
    leo_ris: &CMatrix,
    w_sum: &CVector,
    alpha_m: f64,
    sigma_m_sq: f64,
    rng: &mut SeededRng,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha_m) {
        return Err(invalid(format!("alpha = {alpha_m} outside [0, 1]")));
    }
    let noise = sample_cgauss(rng, leo_ris.rows(), sigma_m_sq)?;
    if m >= noise.len() {
        return Err(invalid(format!("element {m} out of range for {} rows", leo_ris.rows())));
    }
    rf_power_with_noise(m, leo_ris, w_sum, alpha_m, noise[m])
}

/// Logistic harvester output, normalized so zero input yields zero output.
pub fn harvested_power(p_rf: f64, hp: &HarvestParams) -> f64 {
    let upsilon = hp.z / (1.0 + (-hp.a * (p_rf - hp.q)).exp());
    ((upsilon - hp.z * hp.omega) / (1.0 - hp.omega)).clamp(0.0, hp.z)
}

/// `Σ_k ‖Θ·H·w_k‖² + M·σ_m²·‖Θ‖_F²`.
pub fn ris_output_power(theta_mat: &CMatrix, leo_ris: &CMatrix, beams: &[CVector], sigma_m_sq: f64) -> Result<f64> {
    check_dim("configuration/channel rows", theta_mat.cols(), leo_ris.rows())?;
    let mut total = 0.0;
    for w in beams {
        let hw = leo_ris.matvec(w)?;
        total += theta_mat.matvec(&hw)?.norm_sq();
    }
    let m = theta_mat.rows() as f64;
    Ok(total + m * sigma_m_sq * frob_norm_sq(theta_mat))
}

/// Control, conversion and amplifier power of the surface.
pub fn ris_power_consumption(cfg: &MfRisConfig, p_o: f64, rp: &RisPowerParams) -> Result<f64> {
    let diodes = cfg.levels.diodes_per_element()?;
    Ok(0.5 * diodes * cfg.active_elements() as f64 * rp.p_pin + rp.p_c + rp.xi * p_o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{CMatrix, ONE, ZERO};

    const TABLE_LEVELS: QuantLevels = QuantLevels { alpha: 2, beta: 10, theta: 8 };

    fn table_harvest() -> HarvestParams {
        HarvestParams::new(0.024, 150.0, 0.014).unwrap()
    }

    #[test]
    fn config_matrix_cases() {
        let id = config_matrix(&MfRisConfig::uniform(3, 1.0, 1.0, 0.0, 4.0, TABLE_LEVELS)).unwrap();
        assert_eq!(id, CMatrix::identity(3));
        let z = config_matrix(&MfRisConfig::uniform(3, 0.0, 2.0, 1.0, 4.0, TABLE_LEVELS)).unwrap();
        assert!(z.as_slice().iter().all(|x| *x == ZERO));
        let neg = config_matrix(&MfRisConfig::uniform(2, 0.5, 4.0, PI, 4.0, TABLE_LEVELS)).unwrap();
        for d in neg.diagonal() {
            assert!((d - C64::new(-1.0, 0.0)).norm() < 1e-15);
        }
        let bad = MfRisConfig::uniform(2, 1.2, 1.0, 0.0, 4.0, TABLE_LEVELS);
        assert!(config_matrix(&bad).is_err());
        let bad = MfRisConfig::uniform(2, 1.0, 5.0, 0.0, 4.0, TABLE_LEVELS);
        assert!(config_matrix(&bad).is_err());
        let bad = MfRisConfig::uniform(2, 1.0, 1.0, 2.0 * PI, 4.0, TABLE_LEVELS);
        assert!(config_matrix(&bad).is_err());
    }

    #[test]
    fn config_diagonal_bounded_by_beta_max() {
        let mut rng = SeededRng::new(3);
        for _ in 0..100 {
            let mut cfg = MfRisConfig::uniform(8, 0.0, 0.0, 0.0, 6.0, TABLE_LEVELS);
            for m in 0..8 {
                cfg.alpha[m] = rng.uniform();
                cfg.beta[m] = rng.uniform_range(0.0, 6.0);
                cfg.theta[m] = rng.uniform_range(0.0, 2.0 * PI);
            }
            let th = config_matrix(&cfg).unwrap();
            for (m, d) in th.diagonal().iter().enumerate() {
                let expect = cfg.alpha[m] * cfg.beta[m].sqrt();
                assert!((d.norm() - expect).abs() < 1e-12);
                assert!(d.norm() <= 6f64.sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn eh_matrix_cases() {
        let z = eh_matrix(1, 1.0, 3).unwrap();
        assert!(z.as_slice().iter().all(|x| *x == ZERO));
        let t = eh_matrix(0, 0.0, 2).unwrap();
        assert_eq!(t, CMatrix::diag(&[ONE, ZERO]));
        let t = eh_matrix(2, 0.3, 4).unwrap();
        let nz: Vec<_> = t.as_slice().iter().filter(|x| **x != ZERO).collect();
        assert_eq!(nz.len(), 1);
        assert!((t[(2, 2)].re - 0.7).abs() < 1e-15);
        assert!(eh_matrix(0, -0.1, 2).is_err());
        assert!(eh_matrix(0, 1.1, 2).is_err());
    }

    #[test]
    fn rf_power_cases() {
        let mut rng = SeededRng::new(1);
        let h = CMatrix::from_vec(3, 2, sample_cgauss(&mut rng, 6, 1.0).unwrap().0).unwrap();
        let w = sample_cgauss(&mut rng, 2, 1.0).unwrap();
        assert_eq!(received_rf_power(1, &h, &w, 1.0, 5.0, &mut rng).unwrap(), 0.0);

        let eye = CMatrix::identity(3);
        let mut e = CVector::zeros(3);
        e[2] = ONE;
        let p = received_rf_power(2, &eye, &e, 0.0, 0.0, &mut rng).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rf_power_matches_explicit_selector_product() {
        let mut rng = SeededRng::new(21);
        for _ in 0..20 {
            let h = CMatrix::from_vec(5, 3, sample_cgauss(&mut rng, 15, 1.0).unwrap().0).unwrap();
            let w = sample_cgauss(&mut rng, 3, 2.0).unwrap();
            let alpha = rng.uniform();
            let m = rng.below(5);
            let mut twin = rng.clone();
            let p = received_rf_power(m, &h, &w, alpha, 0.3, &mut rng).unwrap();
            let noise = sample_cgauss(&mut twin, 5, 0.3).unwrap();
            let t = eh_matrix(m, alpha, 5).unwrap();
            let inner = h.matvec(&w).unwrap().add(&noise).unwrap();
            let oracle = t.matvec(&inner).unwrap().norm_sq();
            assert!((p - oracle).abs() <= 1e-12 * oracle.max(1e-300));
        }
    }

    #[test]
    fn harvest_zero_threshold_and_saturation() {
        let hp = table_harvest();
        assert!(harvested_power(0.0, &hp).abs() <= 1e-12);

        let omega = 1.0 / (1.0 + 2.1f64.exp());
        assert!((hp.omega - omega).abs() < 1e-15);
        let upsilon = 0.024 / (1.0 + 0.0f64.exp());
        let oracle = (upsilon - 0.024 * omega) / (1.0 - omega);
        let p = harvested_power(0.014, &hp);
        assert!((p - oracle).abs() <= 1e-15);
        assert!((p - 0.01053).abs() < 5e-5, "{p}");

        assert!((harvested_power(10.0, &hp) - 0.024).abs() <= 1e-6);
    }

    #[test]
    fn harvest_monotone_and_bounded() {
        let hp = table_harvest();
        let mut prev = harvested_power(0.0, &hp);
        for i in 1..=10_000 {
            let p = harvested_power(i as f64 * 1e-4, &hp);
            assert!(p >= prev);
            assert!((0.0..=hp.z).contains(&p));
            prev = p;
        }
    }

    #[test]
    fn harvest_params_validation() {
        assert!(HarvestParams::new(0.024, 0.0, 0.014).is_err());
        assert!(HarvestParams::new(0.024, 150.0, 0.0).is_err());
        let mut hp = table_harvest();
        hp.omega *= 1.1;
        assert!(hp.validate().is_err());
    }

    #[test]
    fn output_power_cases() {
        let mut rng = SeededRng::new(5);
        let h = CMatrix::from_vec(4, 3, sample_cgauss(&mut rng, 12, 1.0).unwrap().0).unwrap();
        let w = vec![sample_cgauss(&mut rng, 3, 1.0).unwrap(); 2];
        assert_eq!(ris_output_power(&CMatrix::zeros(4, 4), &h, &w, 0.1).unwrap(), 0.0);

        let mut e = CVector::zeros(3);
        e[0] = ONE;
        let p = ris_output_power(&CMatrix::identity(3), &CMatrix::identity(3), &[e], 0.0).unwrap();
        assert!((p - 1.0).abs() < 1e-15);

        let diag: Vec<C64> = sample_cgauss(&mut rng, 4, 1.0).unwrap().0;
        let th = CMatrix::diag(&diag);
        let p = ris_output_power(&th, &h, &w, 0.05).unwrap();
        let mut oracle = 0.0;
        for wk in &w {
            for m in 0..4 {
                let mut s = C64::new(0.0, 0.0);
                for n in 0..3 {
                    s += diag[m] * h[(m, n)] * wk[n];
                }
                oracle += s.norm_sqr();
            }
        }
        let fro: f64 = diag.iter().map(|d| d.norm_sqr()).sum();
        oracle += 4.0 * 0.05 * fro;
        assert!((p - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn consumption_table_values() {
        let rp = RisPowerParams { p_pin: 0.33e-3, p_c: 10.0, xi: 1.1, sigma_m_sq: 1e-10 };
        let cfg = MfRisConfig::uniform(16, 1.0, 1.0, 0.0, 4.0, TABLE_LEVELS);
        let pin = 0.5 * (1.0 + 10f64.log2() + 6.0) * 16.0 * 0.33e-3;
        assert!((pin - 0.02725).abs() < 5e-5);
        let base = ris_power_consumption(&cfg, 0.0, &rp).unwrap();
        assert!((base - (10.0 + pin)).abs() < 1e-12);
        assert!((base - 10.027).abs() < 1e-3);

        let p1 = ris_power_consumption(&cfg, 2.0, &rp).unwrap();
        let p2 = ris_power_consumption(&cfg, 4.0, &rp).unwrap();
        assert!(((p2 - p1) - 1.1 * 2.0).abs() < 1e-12);

        let empty = MfRisConfig::uniform(0, 1.0, 1.0, 0.0, 4.0, TABLE_LEVELS);
        assert!((ris_power_consumption(&empty, 3.0, &rp).unwrap() - (10.0 + 3.3)).abs() < 1e-12);

        let bad = MfRisConfig { levels: QuantLevels { alpha: 1, beta: 10, theta: 8 }, ..cfg };
        assert!(ris_power_consumption(&bad, 0.0, &rp).is_err());
    }

    #[test]
    fn quantized_stays_on_grid() {
        let mut cfg = MfRisConfig::uniform(3, 0.3, 1.7, 1.0, 4.0, TABLE_LEVELS);
        cfg.theta[2] = 6.2;
        let q = cfg.quantized();
        q.validate().unwrap();
        assert_eq!(q.alpha, vec![0.0; 3]);
        let step = 4.0 / 9.0;
        assert!(((q.beta[0] / step).round() * step - q.beta[0]).abs() < 1e-12);
        assert_eq!(q.theta[2], 0.0);
        assert!((q.theta[0] - PI / 4.0).abs() < 1e-12);
    }
}

//! Per-slot channel realizations, combined LEO/MF-RIS channels, SINR and rate.
//!
//! LoS components are planar-array steering vectors; the LEO-to-surface
//! channel is the Kronecker product of vertical arrival, horizontal arrival
//! and departure vectors, reshaped row-major into an `M x N` matrix.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::numerics::{kron, CMatrix, CVector, SeededRng, C64, ZERO};

/// Vertical/horizontal angles of arrival and departure, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    pub phi_r: f64,
    pub theta_r: f64,
    pub phi_t: f64,
    pub theta_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Linear pathloss at 1 m.
    pub h0: f64,
    /// Pathloss exponent.
    pub k0: f64,
    /// Linear Rician factor.
    pub beta0: f64,
    /// Wavelength, m.
    pub lambda: f64,
    /// Element spacing, m.
    pub d_elem: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.h0 > 0.0 && self.k0 > 0.0 && self.beta0 >= 0.0 && self.lambda > 0.0 && self.d_elem > 0.0;
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("channel params out of range: {self:?}")))
        }
    }

    /// Large-scale power gain `h0·d^(-k0)`.
    pub fn pathloss(&self, distance: f64) -> f64 {
        self.h0 * distance.powf(-self.k0)
    }
}

/// Which angular product drives the per-element phase progression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteeringMode {
    SinSin,
    SinCos,
}

/// Interference accounting in the SINR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceMode {
    /// Other-LEO streams only for `k' != k`, as in the received-signal model.
    #[default]
    AsWritten,
    /// Every stream of every other LEO interferes.
    AllUsers,
}

/// One slot of small- and large-scale fading for all LEOs and users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// LEO `l` to its own surface, `M x N`.
    pub leo_ris: Vec<CMatrix>,
    /// `direct[l][k]`: LEO `l` to user `k`, length `N`.
    pub direct: Vec<Vec<CVector>>,
    /// `reflect[l][k]`: surface `l` to user `k`, length `M`.
    pub reflect: Vec<Vec<CVector>>,
}

impl ChannelRealization {
    pub fn num_leo(&self) -> usize {
        self.leo_ris.len()
    }
}

pub fn steering_vector(n: usize, phi: f64, theta: f64, params: &ChannelParams, mode: SteeringMode) -> Result<CVector> {
    if n == 0 {
        return Err(invalid("steering vector needs at least one element"));
    }
    let f = match mode {
        SteeringMode::SinSin => phi.sin() * theta.sin(),
        SteeringMode::SinCos => phi.sin() * theta.cos(),
    };
    let step = -2.0 * PI / params.lambda * params.d_elem * f;
    Ok(CVector((0..n).map(|i| C64::from_polar(1.0, step * i as f64)).collect()))
}

/// LoS matrix of the LEO-to-surface link, `(m_h·m_v) x n`.
pub fn los_matrix(
    m_h: usize,
    m_v: usize,
    n: usize,
    angles: &SteeringAngles,
    params: &ChannelParams,
) -> Result<CMatrix> {
    if m_h == 0 || m_v == 0 || n == 0 {
        return Err(invalid(format!("LoS matrix dimensions must be positive (m_h={m_h}, m_v={m_v}, n={n})")));
    }
    let vert = steering_vector(m_v, angles.phi_r, angles.theta_r, params, SteeringMode::SinSin)?;
    let horiz = steering_vector(m_h, angles.phi_r, angles.theta_r, params, SteeringMode::SinCos)?;
    let dep = steering_vector(n, angles.phi_t, angles.theta_t, params, SteeringMode::SinCos)?;
    let flat = kron(&kron(&vert, &horiz), &dep);
    CMatrix::from_vec(m_h * m_v, n, flat.0)
}

fn rician_weights(distance: f64, params: &ChannelParams) -> Result<(f64, f64, f64)> {
    if !(distance > 0.0) {
        return Err(invalid(format!("distance must be > 0, got {distance}")));
    }
    let amp = params.pathloss(distance).sqrt();
    let b = params.beta0;
    let (los_w, nlos_w) = if b.is_infinite() { (1.0, 0.0) } else { ((b / (b + 1.0)).sqrt(), (1.0 / (b + 1.0)).sqrt()) };
    Ok((amp, los_w, nlos_w))
}

fn rician_entries(los: &[C64], distance: f64, params: &ChannelParams, rng: &mut SeededRng) -> Result<Vec<C64>> {
    let (amp, los_w, nlos_w) = rician_weights(distance, params)?;
    Ok(los.iter().map(|&z| amp * (los_w * z + nlos_w * rng.cgauss(1.0))).collect())
}

/// Rician fading matrix around a deterministic LoS component.
pub fn rician(los: &CMatrix, distance: f64, params: &ChannelParams, rng: &mut SeededRng) -> Result<CMatrix> {
    let data = rician_entries(los.as_slice(), distance, params, rng)?;
    CMatrix::from_vec(los.rows(), los.cols(), data)
}

/// Vector form of [`rician`], used for LEO-user and surface-user links.
pub fn rician_vector(los: &CVector, distance: f64, params: &ChannelParams, rng: &mut SeededRng) -> Result<CVector> {
    Ok(CVector(rician_entries(los.as_slice(), distance, params, rng)?))
}

/// `g = hᴴ + rᴴ·Θ·H`, returned as a length-`N` row vector.
pub fn combined_channel(h: &CVector, r: &CVector, theta_mat: &CMatrix, leo_ris: &CMatrix) -> Result<CVector> {
    let m = r.len();
    let n = h.len();
    check_dim("configuration matrix rows", m, theta_mat.rows())?;
    check_dim("configuration matrix cols", m, theta_mat.cols())?;
    check_dim("LEO-surface channel rows", m, leo_ris.rows())?;
    check_dim("LEO-surface channel cols", n, leo_ris.cols())?;

    let r_theta = theta_mat.left_mul(&r.conj())?;
    let reflected = leo_ris.left_mul(&r_theta)?;
    Ok(CVector(h.iter().zip(reflected.iter()).map(|(hn, rn)| hn.conj() + rn).collect()))
}

fn gain(g: &CVector, w: &CVector) -> f64 {
    g.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<C64>().norm_sqr()
}

/// SINR of user `k` served by LEO `l`. `g_all[l][k]` and `w_all[l][k]`.
pub fn sinr(
    g_all: &[Vec<CVector>],
    w_all: &[Vec<CVector>],
    sigma_sq: f64,
    l: usize,
    k: usize,
    mode: InterferenceMode,
) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(invalid(format!("noise power must be > 0, got {sigma_sq}")));
    }
    check_dim("beamformer LEO count", g_all.len(), w_all.len())?;
    if l >= g_all.len() || k >= g_all[l].len() {
        return Err(invalid(format!("SINR index ({l}, {k}) out of range")));
    }
    for (gl, wl) in g_all.iter().zip(w_all) {
        check_dim("beamformer user count", gl.len(), wl.len())?;
        for (g, w) in gl.iter().zip(wl) {
            check_dim("beamformer length", g.len(), w.len())?;
        }
    }

    let g = &g_all[l][k];
    let signal = gain(g, &w_all[l][k]);
    let intra: f64 = w_all[l].iter().enumerate().filter(|&(kp, _)| kp != k).map(|(_, w)| gain(g, w)).sum();
    let mut inter = 0.0;
    for (lp, (gl, wl)) in g_all.iter().zip(w_all).enumerate() {
        if lp == l {
            continue;
        }
        for (kp, w) in wl.iter().enumerate() {
            if kp == k && mode == InterferenceMode::AsWritten {
                continue;
            }
            inter += gain(&gl[k], w);
        }
    }
    Ok(signal / (intra + inter + sigma_sq))
}

/// Achievable rate `log2(1 + γ)`, bits/s/Hz.
pub fn rate(gamma: f64) -> f64 {
    (1.0 + gamma).log2()
}

/// All-zero beamformers, `[l][k]` of length `n`.
pub fn zero_beams(num_leo: usize, num_users: usize, n: usize) -> Vec<Vec<CVector>> {
    vec![vec![CVector(vec![ZERO; n]); num_users]; num_leo]
}

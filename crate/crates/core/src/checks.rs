//! Built-in invariant and oracle checks, shared by the `check` command and
//! the acceptance tests. Each check recomputes its reference with plain
//! loops rather than the library's vectorized paths.

use std::f64::consts::PI;

use crate::channel::{combined_channel, rate, sinr, InterferenceMode};
use crate::ddpg::Mlp;
use crate::energy::{phase_of, shadow_half_angle, time_to_shadow, time_to_sun, wrap_angle, OrbitParams, Phase};
use crate::env::{random_action, Env, Scenario};
use crate::fed::{aggregate, broadcast_merge, extract_with_mask, slice_mask, ModelSlice};
use crate::mfris::{harvested_power, HarvestParams};
use crate::numerics::{CMatrix, CVector, SeededRng, C64, ZERO};
use crate::runner::ExperimentConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Max relative error between analytic and central-difference gradients of
/// `Σ output·u` over `params` random coordinates and `inputs` random inputs.
/// Denominators are floored at `1e-6` so roundoff on vanishing gradients
/// does not masquerade as a mismatch.
pub fn gradient_max_rel_error(sizes: &[usize], params: usize, inputs: usize, seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let mut net = Mlp::init(sizes, &mut rng).expect("valid sizes");
    for p in net.params_mut() {
        *p = rng.normal() / (sizes[0] as f64).sqrt();
    }
    let x: Vec<f64> = (0..inputs * sizes[0]).map(|_| rng.normal()).collect();
    let out = net.output_dim();
    let u: Vec<f64> = (0..inputs * out).map(|_| rng.normal()).collect();
    let tape = net.forward_batch(&x, inputs).expect("shape");
    let (grad, _) = net.backward_batch(&tape, &u).expect("shape");
    let objective = |n: &Mlp| -> f64 {
        let t = n.forward_batch(&x, inputs).expect("shape");
        t.output().iter().zip(&u).map(|(a, b)| a * b).sum()
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..params {
        let i = rng.below(net.params().len());
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let fp = objective(&net);
        net.params_mut()[i] = orig - h;
        let fm = objective(&net);
        net.params_mut()[i] = orig;
        let fd = (fp - fm) / (2.0 * h);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

pub fn gradient_check(cfg: &ExperimentConfig) -> CheckResult {
    let sc = &cfg.scenario;
    let actor = cfg.train.actor_sizes(sc.state_dim(), sc.action_dim());
    let critic = cfg.train.critic_sizes(sc.state_dim(), sc.num_leo * sc.action_dim());
    let ea = gradient_max_rel_error(&actor, 100, 10, 1);
    let ec = gradient_max_rel_error(&critic, 100, 10, 2);
    result(
        "gradient",
        ea < 1e-4 && ec < 1e-4,
        format!("actor {actor:?} max rel err {ea:.2e}, critic {critic:?} max rel err {ec:.2e} (limit 1e-4)"),
    )
}

pub fn harvester_check() -> CheckResult {
    let hp = HarvestParams::new(0.024, 150.0, 0.014).expect("table constants");
    let zero = harvested_power(0.0, &hp);
    let mut monotone = true;
    let mut prev = zero;
    for i in 1..=10_000 {
        let v = harvested_power(0.1 * i as f64 / 10_000.0, &hp);
        monotone &= v >= prev;
        prev = v;
    }
    let sat = harvested_power(10.0, &hp);
    let ok = zero.abs() <= 1e-12 && monotone && (sat - 0.024).abs() <= 1e-6;
    result("harvester", ok, format!("P_h(0) = {zero:.3e}, monotone on 1e4 grid: {monotone}, P_h(10 W) = {sat:.9} W"))
}

/// SINR with every sum written out over explicit indices.
#[allow(clippy::too_many_arguments)]
fn sinr_oracle(
    h: &[Vec<CVector>],
    r: &[Vec<CVector>],
    theta: &[Vec<C64>],
    big_h: &[CMatrix],
    w: &[Vec<CVector>],
    sigma_sq: f64,
    l: usize,
    k: usize,
) -> f64 {
    let (n, m) = (w[0][0].len(), theta[0].len());
    let g = |l: usize, k: usize| -> Vec<C64> {
        (0..n)
            .map(|j| {
                let mut acc = h[l][k][j].conj();
                for i in 0..m {
                    acc += r[l][k][i].conj() * theta[l][i] * big_h[l][(i, j)];
                }
                acc
            })
            .collect()
    };
    let gain = |gv: &[C64], wv: &CVector| -> f64 {
        let mut acc = ZERO;
        for j in 0..n {
            acc += gv[j] * wv[j];
        }
        acc.norm_sqr()
    };
    let own = g(l, k);
    let signal = gain(&own, &w[l][k]);
    let mut interference = 0.0;
    for kp in 0..w[l].len() {
        if kp != k {
            interference += gain(&own, &w[l][kp]);
        }
    }
    for lp in 0..w.len() {
        if lp == l {
            continue;
        }
        let other = g(lp, k);
        for kp in 0..w[lp].len() {
            if kp != k {
                interference += gain(&other, &w[lp][kp]);
            }
        }
    }
    signal / (interference + sigma_sq)
}

pub fn sinr_check() -> CheckResult {
    let (l_count, k_count, n, m) = (2, 3, 4, 4);
    let mut rng = SeededRng::new(77);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let vec = |rng: &mut SeededRng, len| CVector((0..len).map(|_| rng.cgauss(1.0)).collect());
        let h: Vec<Vec<CVector>> = (0..l_count).map(|_| (0..k_count).map(|_| vec(&mut rng, n)).collect()).collect();
        let r: Vec<Vec<CVector>> = (0..l_count).map(|_| (0..k_count).map(|_| vec(&mut rng, m)).collect()).collect();
        let theta: Vec<Vec<C64>> = (0..l_count)
            .map(|_| (0..m).map(|_| C64::from_polar(rng.uniform() * 2.0, rng.uniform_range(0.0, 2.0 * PI))).collect())
            .collect();
        let big_h: Vec<CMatrix> = (0..l_count)
            .map(|_| CMatrix::from_vec(m, n, (0..m * n).map(|_| rng.cgauss(1.0)).collect()).expect("shape"))
            .collect();
        let w: Vec<Vec<CVector>> = (0..l_count).map(|_| (0..k_count).map(|_| vec(&mut rng, n)).collect()).collect();
        let sigma_sq = rng.uniform_range(0.01, 1.0);
        let g: Vec<Vec<CVector>> = (0..l_count)
            .map(|l| {
                let t = CMatrix::diag(&theta[l]);
                (0..k_count).map(|k| combined_channel(&h[l][k], &r[l][k], &t, &big_h[l]).expect("shape")).collect()
            })
            .collect();
        for l in 0..l_count {
            for k in 0..k_count {
                let fast = sinr(&g, &w, sigma_sq, l, k, InterferenceMode::AsWritten).expect("shape");
                let slow = sinr_oracle(&h, &r, &theta, &big_h, &w, sigma_sq, l, k);
                worst = worst.max((fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    result("sinr", worst <= 1e-10, format!("max rel err {worst:.2e} over 100 instances (limit 1e-10)"))
}

pub fn energy_geometry_check() -> CheckResult {
    let base = OrbitParams { r_e: 6.378e6, h_s: 1.0e6, phi_sun: 0.0, omega_dot: 7.29e-5 };
    let threshold = (6378.0f64 / 7378.0).asin();
    let mut above_zero = true;
    for i in 1..=1000 {
        let phi = threshold + (PI / 2.0 - threshold) * i as f64 / 1000.0;
        above_zero &= shadow_half_angle(&OrbitParams { phi_sun: phi, ..base }) == 0.0;
    }
    let mut rng = SeededRng::new(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let theta_0 = rng.uniform_range(0.0, PI);
        let theta = rng.uniform_range(-PI, PI);
        let op = base;
        let boundary_err = match phase_of(theta, theta_0) {
            Phase::Sun => {
                let t = time_to_shadow(theta, theta_0, &op).expect("sun");
                let end = wrap_angle(theta + op.omega_dot * t);
                wrap_angle(end + theta_0).abs()
            }
            Phase::Shadow => {
                let t = time_to_sun(theta, theta_0, &op).expect("shadow");
                let end = wrap_angle(theta + op.omega_dot * t);
                wrap_angle(end - theta_0).abs()
            }
        };
        worst = worst.max(boundary_err);
    }
    result(
        "energy_geometry",
        above_zero && worst <= 1e-9,
        format!(
            "threshold {threshold:.6} rad, zero above threshold: {above_zero}, phase boundary err {worst:.2e} rad over 1e3 states"
        ),
    )
}

/// Random-action rollout; returns (slots, depletion events, violations).
pub fn battery_rollout(sc: &Scenario, slots: usize, seed: u64) -> crate::Result<(usize, usize, usize)> {
    let mut env = Env::new(sc.clone())?;
    env.reset(seed);
    let mut rng = SeededRng::new(seed ^ 0xBA77);
    let (mut depletions, mut violations) = (0, 0);
    for _ in 0..slots {
        let acts: Vec<_> = (0..sc.num_leo).map(|_| random_action(sc, &mut rng)).collect();
        let out = env.step(&acts)?;
        for (a, r) in out.metrics.agents.iter().zip(&out.rewards) {
            if !(0.0..=sc.battery_capacity).contains(&a.battery) {
                violations += 1;
            }
            if a.battery_raw < 0.0 {
                depletions += 1;
                if !(r.c[3] > 0.0) {
                    violations += 1;
                }
            }
        }
    }
    Ok((slots, depletions, violations))
}

pub fn battery_check(cfg: &ExperimentConfig) -> CheckResult {
    match battery_rollout(&cfg.scenario, 10_000, 3) {
        Ok((slots, dep, bad)) => {
            result("battery", bad == 0, format!("{slots} slots, {dep} depletion events, {bad} violations"))
        }
        Err(e) => result("battery", false, e.to_string()),
    }
}

pub fn federated_check() -> CheckResult {
    let mut rng = SeededRng::new(9);
    let p = 1000;
    let mask = slice_mask(p, 0.5, 4).expect("fraction");
    let v: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
    let same = extract_with_mask(&v, &mask).expect("mask");
    let fixed = aggregate(&[same.clone(), same.clone(), same.clone()], &[0.1, 0.7, 0.2]).expect("agg");
    let fixed_ok = fixed == same;

    let members: Vec<Vec<f64>> = (0..5).map(|_| (0..p).map(|_| rng.normal()).collect()).collect();
    let slices: Vec<ModelSlice> = members.iter().map(|w| extract_with_mask(w, &mask).expect("mask")).collect();
    let agg = aggregate(&slices, &[1.0; 5]).expect("agg");
    let mut worst: f64 = 0.0;
    for (j, &i) in mask.iter().enumerate() {
        let mut s = 0.0;
        for w in &members {
            s += w[i];
        }
        let want = s / 5.0;
        worst = worst.max((agg.values[j] - want).abs() / want.abs().max(1e-300));
    }
    let merged = broadcast_merge(&members[0], &agg).expect("merge");
    let roundtrip = extract_with_mask(&merged, &mask).expect("mask") == agg;
    let untouched = (0..p).filter(|i| mask.binary_search(i).is_err()).all(|i| merged[i] == members[0][i]);
    result(
        "federated",
        fixed_ok && worst <= 1e-14 && roundtrip && untouched,
        format!("fixed point exact: {fixed_ok}, mean rel err {worst:.2e}, roundtrip exact: {roundtrip}, unmasked untouched: {untouched}"),
    )
}

/// Rate sanity used by `check`: strictly increasing in SINR.
fn rate_check() -> CheckResult {
    let ok = (0..1000).all(|i| rate(i as f64 * 0.01 + 0.01) > rate(i as f64 * 0.01));
    result("rate", ok, "log2(1+γ) strictly increasing on a 1e3 grid".into())
}

pub fn run_all_with(cfg: &ExperimentConfig) -> Vec<CheckResult> {
    vec![
        gradient_check(cfg),
        harvester_check(),
        sinr_check(),
        energy_geometry_check(),
        battery_check(cfg),
        federated_check(),
        rate_check(),
    ]
}

pub fn run_all() -> Vec<CheckResult> {
    run_all_with(&ExperimentConfig::default())
}

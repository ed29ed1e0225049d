//! Actor-critic learners: networks, replay, targets and the multi-agent
//! trainer with centralized critics.

pub mod checkpoint;
pub mod mlp;
pub mod optim;
pub mod replay;

use serde::{Deserialize, Serialize};

pub use mlp::{param_count, Mlp, Tape};
pub use optim::{Optimizer, OptimizerKind};
pub use replay::ReplayBuffer;

use crate::error::{check_dim, invalid, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch: usize,
    pub buffer: usize,
    pub noise_sigma: f64,
    /// Multiplicative decay of `noise_sigma`, applied once per episode.
    pub noise_decay: f64,
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
    /// Run one update every `train_every` environment slots.
    pub train_every: usize,
    /// Multiplier applied to rewards before they enter the replay buffer.
    pub reward_scale: f64,
    /// Raw actions are clipped to `[-action_bound, action_bound]`.
    pub action_bound: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_actor: 0.001,
            lr_critic: 0.0005,
            gamma: 0.99,
            tau: 0.005,
            batch: 64,
            buffer: 100_000,
            noise_sigma: 0.1,
            noise_decay: 0.999,
            hidden: vec![256, 256],
            optimizer: OptimizerKind::Sgd,
            train_every: 1,
            reward_scale: 1.0,
            action_bound: 4.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.tau) {
            return Err(invalid("gamma and tau must lie in [0, 1]"));
        }
        if self.batch == 0 || self.batch > self.buffer {
            return Err(invalid(format!(
                "batch must be in [1, buffer], got {} with buffer {}",
                self.batch, self.buffer
            )));
        }
        if !(self.lr_actor >= 0.0 && self.lr_critic >= 0.0) {
            return Err(invalid("learning rates must be >= 0"));
        }
        if !(self.noise_sigma >= 0.0) || !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return Err(invalid("noise_sigma must be >= 0 and noise_decay in (0, 1]"));
        }
        if self.hidden.contains(&0) {
            return Err(invalid("hidden layer sizes must be >= 1"));
        }
        if self.train_every == 0 {
            return Err(invalid("train_every must be >= 1"));
        }
        if !(self.reward_scale > 0.0) || !(self.action_bound > 0.0) {
            return Err(invalid("reward_scale and action_bound must be > 0"));
        }
        Ok(())
    }

    pub fn actor_sizes(&self, state_dim: usize, action_dim: usize) -> Vec<usize> {
        let mut s = vec![state_dim];
        s.extend(&self.hidden);
        s.push(action_dim);
        s
    }

    pub fn critic_sizes(&self, state_dim: usize, joint_action_dim: usize) -> Vec<usize> {
        let mut s = vec![state_dim + joint_action_dim];
        s.extend(&self.hidden);
        s.push(1);
        s
    }
}

/// One environment step as seen by all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTransition {
    pub states: Vec<Vec<f64>>,
    /// Raw (pre-decoding) actions of every agent.
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<Vec<f64>>,
    /// Last slot of the episode; masks bootstrapping.
    pub done: bool,
}

/// Minibatch in row-major per-agent blocks.
#[derive(Debug, Clone)]
pub struct Batch {
    pub size: usize,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<Vec<f64>>,
    pub next_states: Vec<Vec<f64>>,
    pub done: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(items: &[&JointTransition]) -> Result<Self> {
        let first = items.first().ok_or_else(|| invalid("empty batch"))?;
        let agents = first.states.len();
        let mut b = Batch {
            size: items.len(),
            states: vec![Vec::new(); agents],
            actions: vec![Vec::new(); agents],
            rewards: vec![Vec::with_capacity(items.len()); agents],
            next_states: vec![Vec::new(); agents],
            done: Vec::with_capacity(items.len()),
        };
        for t in items {
            check_dim("agents in transition", agents, t.states.len())?;
            check_dim("agents in transition", agents, t.actions.len())?;
            check_dim("agents in transition", agents, t.rewards.len())?;
            check_dim("agents in transition", agents, t.next_states.len())?;
            for i in 0..agents {
                b.states[i].extend_from_slice(&t.states[i]);
                b.actions[i].extend_from_slice(&t.actions[i]);
                b.rewards[i].push(t.rewards[i]);
                b.next_states[i].extend_from_slice(&t.next_states[i]);
            }
            b.done.push(t.done);
        }
        Ok(b)
    }

    pub fn agents(&self) -> usize {
        self.states.len()
    }
}

/// Rows `[state, action_1, …, action_L]` for a batch.
pub fn critic_input(states: &[f64], actions: &[&[f64]], batch: usize) -> Result<Vec<f64>> {
    if batch == 0 || !states.len().is_multiple_of(batch) {
        return Err(invalid("state block is not a whole number of rows"));
    }
    let s_dim = states.len() / batch;
    let mut dims = Vec::with_capacity(actions.len());
    for a in actions {
        if a.len() % batch != 0 {
            return Err(invalid("action block is not a whole number of rows"));
        }
        dims.push(a.len() / batch);
    }
    let row = s_dim + dims.iter().sum::<usize>();
    let mut out = Vec::with_capacity(batch * row);
    for b in 0..batch {
        out.extend_from_slice(&states[b * s_dim..(b + 1) * s_dim]);
        for (a, &d) in actions.iter().zip(&dims) {
            out.extend_from_slice(&a[b * d..(b + 1) * d]);
        }
    }
    Ok(out)
}

/// Policy output plus independent Gaussian exploration noise.
pub fn act(actor: &Mlp, state: &[f64], noise_sigma: f64, rng: &mut SeededRng) -> Result<Vec<f64>> {
    let mut a = actor.forward(state)?;
    if noise_sigma > 0.0 {
        for v in a.iter_mut() {
            *v += noise_sigma * rng.normal();
        }
    }
    Ok(a)
}

/// `y = r + γ·(1−done)·Q′(s′, μ′_1(s′_1), …, μ′_L(s′_L))` for agent `agent`.
pub fn critic_target(
    critic_target: &Mlp,
    actor_targets: &[&Mlp],
    batch: &Batch,
    agent: usize,
    gamma: f64,
) -> Result<Vec<f64>> {
    let next = target_actions(actor_targets, batch, None)?;
    critic_target_from_actions(critic_target, &next, batch, agent, gamma)
}

/// Target-actor actions on the next states, optionally clipped.
pub fn target_actions(actor_targets: &[&Mlp], batch: &Batch, bound: Option<f64>) -> Result<Vec<Vec<f64>>> {
    check_dim("target actors", batch.agents(), actor_targets.len())?;
    actor_targets
        .iter()
        .zip(&batch.next_states)
        .map(|(a, s)| {
            let mut out = a.forward_batch(s, batch.size)?.output().to_vec();
            if let Some(b) = bound {
                out.iter_mut().for_each(|v| *v = v.clamp(-b, b));
            }
            Ok(out)
        })
        .collect()
}

pub fn critic_target_from_actions(
    critic_target: &Mlp,
    next_actions: &[Vec<f64>],
    batch: &Batch,
    agent: usize,
    gamma: f64,
) -> Result<Vec<f64>> {
    let x = batch.size;
    let refs: Vec<&[f64]> = next_actions.iter().map(|a| a.as_slice()).collect();
    let input = critic_input(&batch.next_states[agent], &refs, x)?;
    let q = critic_target.forward_batch(&input, x)?;
    Ok((0..x)
        .map(|b| {
            let boot = if batch.done[b] { 0.0 } else { gamma * q.output()[b] };
            batch.rewards[agent][b] + boot
        })
        .collect())
}

/// Mean squared TD loss and its parameter gradient.
pub fn critic_loss_grad(critic: &Mlp, y: &[f64], batch: &Batch, agent: usize) -> Result<(f64, Vec<f64>)> {
    let x = batch.size;
    check_dim("critic targets", x, y.len())?;
    let refs: Vec<&[f64]> = batch.actions.iter().map(|a| a.as_slice()).collect();
    let input = critic_input(&batch.states[agent], &refs, x)?;
    let tape = critic.forward_batch(&input, x)?;
    let q = tape.output();
    let mut loss = 0.0;
    let mut upstream = vec![0.0; x];
    for b in 0..x {
        let e = y[b] - q[b];
        loss += e * e;
        upstream[b] = -2.0 * e / x as f64;
    }
    let (grad, _) = critic.backward_batch(&tape, &upstream)?;
    Ok((loss / x as f64, grad))
}

/// One descent step on the TD loss; returns the pre-step loss.
pub fn critic_update(
    critic: &mut Mlp,
    opt: &mut Optimizer,
    y: &[f64],
    batch: &Batch,
    agent: usize,
    lr: f64,
) -> Result<f64> {
    let (loss, grad) = critic_loss_grad(critic, y, batch, agent)?;
    opt.step(critic.params_mut(), &grad, lr);
    Ok(loss)
}

/// Mean `Q(s, …, μ(s), …)` over the batch and its gradient with respect to
/// the actor parameters. With `action_bound`, gradient components that would
/// push an action further outside the bound are zeroed.
pub fn actor_objective_grad(
    actor: &Mlp,
    critic: &Mlp,
    batch: &Batch,
    agent: usize,
    action_bound: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    let x = batch.size;
    let actor_tape = actor.forward_batch(&batch.states[agent], x)?;
    let mu = actor_tape.output();
    let refs: Vec<&[f64]> =
        batch.actions.iter().enumerate().map(|(i, a)| if i == agent { mu } else { a.as_slice() }).collect();
    let input = critic_input(&batch.states[agent], &refs, x)?;
    let critic_tape = critic.forward_batch(&input, x)?;
    let objective = critic_tape.output().iter().sum::<f64>() / x as f64;
    let upstream = vec![1.0 / x as f64; x];
    let (_, d_input) = critic.backward_batch(&critic_tape, &upstream)?;

    let s_dim = batch.states[agent].len() / x;
    let a_dim = actor.output_dim();
    let offset = s_dim + batch.actions[..agent].iter().map(|a| a.len() / x).sum::<usize>();
    let row = input.len() / x;
    let mut d_mu = vec![0.0; x * a_dim];
    for b in 0..x {
        for j in 0..a_dim {
            let mut g = d_input[b * row + offset + j];
            if let Some(bound) = action_bound {
                let a = mu[b * a_dim + j];
                if (a >= bound && g > 0.0) || (a <= -bound && g < 0.0) {
                    g = 0.0;
                }
            }
            d_mu[b * a_dim + j] = g;
        }
    }
    let (grad, _) = actor.backward_batch(&actor_tape, &d_mu)?;
    Ok((objective, grad))
}

/// One ascent step on the policy objective; returns the gradient norm.
pub fn actor_update(
    actor: &mut Mlp,
    opt: &mut Optimizer,
    critic: &Mlp,
    batch: &Batch,
    agent: usize,
    lr: f64,
    action_bound: Option<f64>,
) -> Result<f64> {
    let (_, grad) = actor_objective_grad(actor, critic, batch, agent, action_bound)?;
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let descent: Vec<f64> = grad.iter().map(|g| -g).collect();
    opt.step(actor.params_mut(), &descent, lr);
    Ok(norm)
}

/// Networks and optimizer state of one agent.
#[derive(Debug, Clone)]
pub struct AgentNets {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic: Mlp,
    pub critic_target: Mlp,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
}

impl AgentNets {
    pub fn new(
        cfg: &TrainConfig,
        state_dim: usize,
        action_dim: usize,
        joint_action_dim: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let actor = Mlp::init(&cfg.actor_sizes(state_dim, action_dim), rng)?;
        let critic = Mlp::init(&cfg.critic_sizes(state_dim, joint_action_dim), rng)?;
        Ok(Self {
            actor_opt: Optimizer::new(cfg.optimizer, actor.params().len()),
            critic_opt: Optimizer::new(cfg.optimizer, critic.params().len()),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    pub actor_grad_norm: f64,
}

/// Multi-agent DDPG with per-agent centralized critics over all raw actions.
#[derive(Debug, Clone)]
pub struct Maddpg {
    cfg: TrainConfig,
    agents: Vec<AgentNets>,
    replay: ReplayBuffer<JointTransition>,
    sample_rng: SeededRng,
    noise_rng: SeededRng,
    sigma: f64,
    observed: usize,
}

impl Maddpg {
    pub fn new(cfg: TrainConfig, state_dims: &[usize], action_dims: &[usize], seed: u64) -> Result<Self> {
        cfg.validate()?;
        check_dim("action dims", state_dims.len(), action_dims.len())?;
        if state_dims.is_empty() {
            return Err(invalid("at least one agent is required"));
        }
        let root = SeededRng::new(seed);
        let mut init_rng = root.derive(10);
        let joint: usize = action_dims.iter().sum();
        let agents = state_dims
            .iter()
            .zip(action_dims)
            .map(|(&s, &a)| AgentNets::new(&cfg, s, a, joint, &mut init_rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            replay: ReplayBuffer::new(cfg.buffer)?,
            sample_rng: root.derive(11),
            noise_rng: root.derive(12),
            sigma: cfg.noise_sigma,
            observed: 0,
            agents,
            cfg,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn agents(&self) -> &[AgentNets] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [AgentNets] {
        &mut self.agents
    }

    pub fn noise_sigma(&self) -> f64 {
        self.sigma
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    /// Raw actions for every agent; exploration noise when `explore`.
    pub fn act(&mut self, states: &[Vec<f64>], explore: bool) -> Result<Vec<Vec<f64>>> {
        check_dim("agent states", self.agents.len(), states.len())?;
        let sigma = if explore { self.sigma } else { 0.0 };
        let bound = self.cfg.action_bound;
        self.agents
            .iter()
            .zip(states)
            .map(|(ag, s)| {
                act(&ag.actor, s, sigma, &mut self.noise_rng)
                    .map(|a| a.into_iter().map(|v| v.clamp(-bound, bound)).collect())
            })
            .collect()
    }

    /// Store a transition (rewards scaled) and train when due.
    pub fn observe(&mut self, mut t: JointTransition) -> Result<Option<TrainStats>> {
        check_dim("agent rewards", self.agents.len(), t.rewards.len())?;
        t.rewards.iter_mut().for_each(|r| *r *= self.cfg.reward_scale);
        self.replay.push(t);
        self.observed += 1;
        if !self.observed.is_multiple_of(self.cfg.train_every) {
            return Ok(None);
        }
        self.train_step()
    }

    /// One update of every critic, actor and target; `None` until the
    /// buffer holds a full minibatch.
    pub fn train_step(&mut self) -> Result<Option<TrainStats>> {
        let Some(idx) = self.replay.sample_indices(self.cfg.batch, &mut self.sample_rng) else {
            return Ok(None);
        };
        let items: Vec<&JointTransition> =
            idx.iter().map(|&i| self.replay.get(i).expect("sampled index in range")).collect();
        let batch = Batch::from_transitions(&items)?;
        let cfg = &self.cfg;
        let targets = {
            let actor_targets: Vec<&Mlp> = self.agents.iter().map(|a| &a.actor_target).collect();
            let next = target_actions(&actor_targets, &batch, Some(cfg.action_bound))?;
            (0..self.agents.len())
                .map(|i| critic_target_from_actions(&self.agents[i].critic_target, &next, &batch, i, cfg.gamma))
                .collect::<Result<Vec<_>>>()?
        };
        let mut loss = 0.0;
        for (i, ag) in self.agents.iter_mut().enumerate() {
            loss += critic_update(&mut ag.critic, &mut ag.critic_opt, &targets[i], &batch, i, cfg.lr_critic)?;
        }
        let mut norm = 0.0;
        for (i, ag) in self.agents.iter_mut().enumerate() {
            norm += actor_update(
                &mut ag.actor,
                &mut ag.actor_opt,
                &ag.critic,
                &batch,
                i,
                cfg.lr_actor,
                Some(cfg.action_bound),
            )?;
        }
        for ag in self.agents.iter_mut() {
            ag.actor_target.soft_update(&ag.actor, cfg.tau)?;
            ag.critic_target.soft_update(&ag.critic, cfg.tau)?;
        }
        let n = self.agents.len() as f64;
        Ok(Some(TrainStats { critic_loss: loss / n, actor_grad_norm: norm / n }))
    }

    pub fn end_episode(&mut self) {
        self.sigma *= self.cfg.noise_decay;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_batch(rng: &mut SeededRng, x: usize, s_dims: &[usize], a_dims: &[usize]) -> Batch {
        let items: Vec<JointTransition> = (0..x)
            .map(|b| JointTransition {
                states: s_dims.iter().map(|&d| (0..d).map(|_| rng.normal()).collect()).collect(),
                actions: a_dims.iter().map(|&d| (0..d).map(|_| rng.normal()).collect()).collect(),
                rewards: s_dims.iter().map(|_| rng.normal()).collect(),
                next_states: s_dims.iter().map(|&d| (0..d).map(|_| rng.normal()).collect()).collect(),
                done: b % 3 == 2,
            })
            .collect();
        let refs: Vec<&JointTransition> = items.iter().collect();
        Batch::from_transitions(&refs).unwrap()
    }

    #[test]
    fn act_noise_statistics() {
        let actor = Mlp::zeros(&[2, 3, 4]).unwrap();
        let mut rng = SeededRng::new(1);
        assert_eq!(act(&actor, &[1.0, 2.0], 0.0, &mut rng).unwrap(), vec![0.0; 4]);
        let a = act(&actor, &[1.0, 2.0], 0.3, &mut SeededRng::new(9)).unwrap();
        let b = act(&actor, &[1.0, 2.0], 0.3, &mut SeededRng::new(9)).unwrap();
        assert_eq!(a, b);
        let n = 10_000;
        let mut sq = [0.0; 4];
        for _ in 0..n {
            for (s, v) in sq.iter_mut().zip(act(&actor, &[0.0, 0.0], 2.0, &mut rng).unwrap()) {
                *s += v * v;
            }
        }
        for s in sq {
            let std = (s / n as f64).sqrt();
            assert!((std - 2.0).abs() < 0.1, "{std}");
        }
    }

    #[test]
    fn critic_target_matches_scalar_oracle() {
        let mut rng = SeededRng::new(4);
        let (s_dims, a_dims) = ([3, 2], [2, 1]);
        let batch = random_batch(&mut rng, 6, &s_dims, &a_dims);
        let actors: Vec<Mlp> = (0..2).map(|i| Mlp::init(&[s_dims[i], 5, a_dims[i]], &mut rng).unwrap()).collect();
        let mut critic = Mlp::init(&[3 + 3, 5, 1], &mut rng).unwrap();
        for p in critic.params_mut() {
            *p = rng.normal();
        }
        let refs: Vec<&Mlp> = actors.iter().collect();
        let y = critic_target(&critic, &refs, &batch, 0, 0.9).unwrap();
        for b in 0..6 {
            let s0 = &batch.next_states[0][b * 3..b * 3 + 3];
            let s1 = &batch.next_states[1][b * 2..b * 2 + 2];
            let mut inp = s0.to_vec();
            inp.extend(actors[0].forward(s0).unwrap());
            inp.extend(actors[1].forward(s1).unwrap());
            let q = critic.forward(&inp).unwrap()[0];
            let want = batch.rewards[0][b] + if batch.done[b] { 0.0 } else { 0.9 * q };
            assert!((y[b] - want).abs() < 1e-12);
        }
        let y0 = critic_target(&critic, &refs, &batch, 0, 0.0).unwrap();
        assert_eq!(y0, batch.rewards[0]);
    }

    #[test]
    fn critic_loss_zero_at_fixed_point() {
        let mut rng = SeededRng::new(5);
        let batch = random_batch(&mut rng, 4, &[2], &[2]);
        let mut critic = Mlp::init(&[4, 3, 1], &mut rng).unwrap();
        let refs: Vec<&[f64]> = batch.actions.iter().map(|a| a.as_slice()).collect();
        let input = critic_input(&batch.states[0], &refs, 4).unwrap();
        let y = critic.forward_batch(&input, 4).unwrap().output().to_vec();
        let before = critic.clone();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, critic.params().len());
        let loss = critic_update(&mut critic, &mut opt, &y, &batch, 0, 0.1).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(critic, before);
    }

    #[test]
    fn critic_single_sample_loss_decreases() {
        let mut rng = SeededRng::new(6);
        let batch = random_batch(&mut rng, 1, &[3], &[2]);
        let mut critic = Mlp::init(&[5, 4, 1], &mut rng).unwrap();
        let y = [2.5];
        let mut opt = Optimizer::new(OptimizerKind::Sgd, critic.params().len());
        let l0 = critic_update(&mut critic, &mut opt, &y, &batch, 0, 1e-3).unwrap();
        let (l1, _) = critic_loss_grad(&critic, &y, &batch, 0).unwrap();
        assert!(l1 < l0);
    }

    #[test]
    fn constant_critic_gives_zero_actor_gradient() {
        let mut rng = SeededRng::new(7);
        let batch = random_batch(&mut rng, 5, &[3, 2], &[2, 2]);
        let actor = Mlp::init(&[3, 4, 2], &mut rng).unwrap();
        let mut critic = Mlp::init(&[3 + 4, 4, 1], &mut rng).unwrap();
        // Zero the output layer's weights: Q is the constant output bias.
        let n = critic.params().len();
        for p in &mut critic.params_mut()[n - 5..n - 1] {
            *p = 0.0;
        }
        let (_, g) = actor_objective_grad(&actor, &critic, &batch, 0, None).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn toy_actor_converges_to_critic_optimum() {
        // dQ/da of Q = -(a - 3)² fed straight into the actor.
        let mut rng = SeededRng::new(8);
        let mut actor = Mlp::from_params(&[1, 1], vec![0.0, 0.0]).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 2);
        for _ in 0..2000 {
            let s: Vec<f64> = (0..16).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let tape = actor.forward_batch(&s, 16).unwrap();
            let d_mu: Vec<f64> = tape.output().iter().map(|a| -2.0 * (a - 3.0) / 16.0).collect();
            let (g, _) = actor.backward_batch(&tape, &d_mu).unwrap();
            let descent: Vec<f64> = g.iter().map(|v| -v).collect();
            opt.step(actor.params_mut(), &descent, 0.05);
        }
        let a = actor.forward(&[0.3]).unwrap()[0];
        assert!((a - 3.0).abs() < 1e-3, "{a}");
    }

    #[test]
    fn training_step_is_reproducible() {
        let cfg = TrainConfig { batch: 4, buffer: 16, hidden: vec![8], noise_sigma: 0.0, ..TrainConfig::default() };
        let run = || {
            let mut m = Maddpg::new(cfg.clone(), &[3, 3], &[2, 2], 42).unwrap();
            let mut rng = SeededRng::new(1);
            for i in 0..8 {
                let s: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
                let a = m.act(&s, true).unwrap();
                m.observe(JointTransition {
                    states: s.clone(),
                    actions: a,
                    rewards: vec![rng.normal(), rng.normal()],
                    next_states: s,
                    done: i == 7,
                })
                .unwrap();
            }
            m.agents().iter().map(|a| a.actor.params().to_vec()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}

//! Experiment orchestration: config parsing, training loops per algorithm,
//! metrics stream, summaries, checkpoints and parameter sweeps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ddpg::checkpoint::save_mlp;
use crate::ddpg::{JointTransition, Maddpg, TrainConfig};
use crate::env::{decode_action, random_action, AgentAction, Env, Scenario, StepOutput};
use crate::error::{Error, Result};
use crate::fed::{federated_round, partition, FlConfig};
use crate::numerics::{mix_seed, SeededRng};

pub const METRICS_SCHEMA: u32 = 1;
pub const SUMMARY_SCHEMA: u32 = 1;
pub const METRICS_HEADER: [&str; 13] =
    ["episode", "slot", "agent", "reward", "ee", "rate_sum", "e_tot", "battery", "c1", "c2", "c3", "c4", "phase"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Femad,
    Maddpg,
    DdpgCentral,
    Random,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Femad => "femad",
            Algorithm::Maddpg => "maddpg",
            Algorithm::DdpgCentral => "ddpg_central",
            Algorithm::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub episodes: usize,
    pub slots: usize,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub checkpoints: bool,
    pub scenario: Scenario,
    pub train: TrainConfig,
    pub fl: FlConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Femad,
            episodes: 150,
            slots: 200,
            seeds: vec![1, 2, 3],
            output: PathBuf::from("out"),
            checkpoints: true,
            scenario: Scenario::default(),
            train: TrainConfig::default(),
            fl: FlConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.slots == 0 {
            return Err(Error::Config("episodes and slots must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.scenario.validate()?;
        self.train.validate()?;
        self.fl.validate(self.scenario.num_leo)?;
        Ok(())
    }

    /// Episodes in the first/last evaluation window (10% of the run).
    pub fn window(&self) -> usize {
        (self.episodes / 10).max(1)
    }
}

/// One row of the metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub slot: usize,
    pub agent: usize,
    pub reward: f64,
    pub ee: f64,
    pub rate_sum: f64,
    pub e_tot: f64,
    pub battery: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub phase: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlRoundLog {
    pub episode: usize,
    pub group: Vec<usize>,
    pub edge: usize,
    pub exchanged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub episodes: usize,
    pub slots: usize,
    pub agents: usize,
    pub window: usize,
    /// Mean reward over slots and agents, per episode.
    pub episode_reward: Vec<f64>,
    /// Mean EE over slots and agents, per episode.
    pub episode_ee: Vec<f64>,
    pub first_window_reward: f64,
    pub final_window_reward: f64,
    pub first_window_ee: f64,
    pub final_window_ee: f64,
    pub fl_rounds: Vec<FlRoundLog>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Window means over per-episode series, shared with recomputation checks.
pub fn window_means(series: &[f64], window: usize) -> (f64, f64) {
    let w = window.min(series.len()).max(1);
    (mean(&series[..w.min(series.len())]), mean(&series[series.len().saturating_sub(w)..]))
}

struct MetricsSink {
    writer: csv::Writer<fs::File>,
}

impl MetricsSink {
    fn create(path: &Path) -> Result<Self> {
        let mut file = fs::File::create(path)?;
        writeln!(file, "# leomf-metrics schema_version={METRICS_SCHEMA}")?;
        // Header row comes from the record's field names.
        Ok(Self { writer: csv::Writer::from_writer(file) })
    }

    fn write(&mut self, r: &MetricsRecord) -> Result<()> {
        self.writer.serialize(r)?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Read a metrics file back, skipping the schema comment line.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn metrics_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("metrics_seed{seed}.csv"))
}

pub fn summary_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("summary_seed{seed}.json"))
}

#[allow(clippy::large_enum_variant)]
enum Policy {
    Random(SeededRng),
    Learner { learner: Maddpg, central: bool },
}

impl Policy {
    fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let sc = &cfg.scenario;
        let (sd, ad, l) = (sc.state_dim(), sc.action_dim(), sc.num_leo);
        let learner_seed = mix_seed(seed, 0x1EA2);
        Ok(match cfg.algorithm {
            Algorithm::Random => Policy::Random(SeededRng::new(mix_seed(seed, 0x2A4D))),
            Algorithm::Femad | Algorithm::Maddpg => Policy::Learner {
                learner: Maddpg::new(cfg.train.clone(), &vec![sd; l], &vec![ad; l], learner_seed)?,
                central: false,
            },
            Algorithm::DdpgCentral => Policy::Learner {
                learner: Maddpg::new(cfg.train.clone(), &[sd * l], &[ad * l], learner_seed)?,
                central: true,
            },
        })
    }
}

fn concat(v: &[Vec<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

/// Train (or roll out) one seed; writes metrics, summary and checkpoints
/// into `dir`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let sc = &cfg.scenario;
    let l_count = sc.num_leo;
    let mut env = Env::new(sc.clone())?;
    let mut policy = Policy::new(cfg, seed)?;
    let femad = cfg.algorithm == Algorithm::Femad && cfg.fl.enabled;
    let groups = partition(l_count, cfg.fl.group_size, cfg.fl.period, cfg.fl.fraction)?;
    let mut sink = MetricsSink::create(&metrics_path(dir, seed))?;
    let mut episode_reward = Vec::with_capacity(cfg.episodes);
    let mut episode_ee = Vec::with_capacity(cfg.episodes);
    let mut fl_rounds = Vec::new();

    for ep in 0..cfg.episodes {
        let mut states: Vec<Vec<f64>> = env.reset(mix_seed(seed, ep as u64)).into_iter().map(|s| s.0).collect();
        let (mut reward_acc, mut ee_acc) = (0.0, 0.0);
        let mut quality = vec![0.0; l_count];
        for slot in 0..cfg.slots {
            let (raw, actions): (Vec<Vec<f64>>, Vec<AgentAction>) = match &mut policy {
                Policy::Random(rng) => (Vec::new(), (0..l_count).map(|_| random_action(sc, rng)).collect()),
                Policy::Learner { learner, central } => {
                    let raw =
                        if *central { learner.act(&[concat(&states)], true)? } else { learner.act(&states, true)? };
                    let flat = concat(&raw);
                    let acts =
                        flat.chunks(sc.action_dim()).map(|c| decode_action(c, sc)).collect::<Result<Vec<_>>>()?;
                    (raw, acts)
                }
            };
            let StepOutput { states: next, rewards, metrics } = env.step(&actions)?;
            let next: Vec<Vec<f64>> = next.into_iter().map(|s| s.0).collect();
            for (l, (r, m)) in rewards.iter().zip(&metrics.agents).enumerate() {
                sink.write(&MetricsRecord {
                    episode: ep,
                    slot,
                    agent: l,
                    reward: r.reward,
                    ee: r.ee,
                    rate_sum: m.rate_sum,
                    e_tot: m.e_tot,
                    battery: m.battery,
                    c1: r.c[0],
                    c2: r.c[1],
                    c3: r.c[2],
                    c4: r.c[3],
                    phase: m.phase.as_str().to_string(),
                })?;
                reward_acc += r.reward;
                ee_acc += r.ee;
                quality[l] += m.channel_quality / cfg.slots as f64;
            }
            if let Policy::Learner { learner, central } = &mut policy {
                let done = slot + 1 == cfg.slots;
                let rs: Vec<f64> = rewards.iter().map(|r| r.reward).collect();
                let t = if *central {
                    JointTransition {
                        states: vec![concat(&states)],
                        actions: raw,
                        rewards: vec![mean(&rs)],
                        next_states: vec![concat(&next)],
                        done,
                    }
                } else {
                    JointTransition {
                        states: states.clone(),
                        actions: raw,
                        rewards: rs,
                        next_states: next.clone(),
                        done,
                    }
                };
                learner.observe(t)?;
            }
            states = next;
        }
        let denom = (cfg.slots * l_count) as f64;
        episode_reward.push(reward_acc / denom);
        episode_ee.push(ee_acc / denom);
        if let Policy::Learner { learner, .. } = &mut policy {
            learner.end_episode();
            if femad && (ep + 1) % cfg.fl.period == 0 {
                let reports = federated_round(
                    learner,
                    &groups,
                    &quality,
                    &cfg.fl.weights,
                    cfg.fl.include_actor,
                    mix_seed(seed, 0xF1_0000 + ep as u64),
                )?;
                fl_rounds.extend(reports.into_iter().map(|r| FlRoundLog {
                    episode: ep,
                    group: r.members,
                    edge: r.edge,
                    exchanged: r.exchanged,
                }));
            }
        }
    }
    sink.finish()?;

    if cfg.checkpoints {
        if let Policy::Learner { learner, .. } = &policy {
            let ck = dir.join(format!("checkpoints_seed{seed}"));
            fs::create_dir_all(&ck)?;
            for (i, a) in learner.agents().iter().enumerate() {
                save_mlp(&ck.join(format!("agent{i}_actor.bin")), &a.actor)?;
                save_mlp(&ck.join(format!("agent{i}_critic.bin")), &a.critic)?;
                save_mlp(&ck.join(format!("agent{i}_actor_target.bin")), &a.actor_target)?;
                save_mlp(&ck.join(format!("agent{i}_critic_target.bin")), &a.critic_target)?;
            }
        }
    }

    let window = cfg.window();
    let (first_window_reward, final_window_reward) = window_means(&episode_reward, window);
    let (first_window_ee, final_window_ee) = window_means(&episode_ee, window);
    let summary = RunSummary {
        schema_version: SUMMARY_SCHEMA,
        algorithm: cfg.algorithm,
        seed,
        episodes: cfg.episodes,
        slots: cfg.slots,
        agents: l_count,
        window,
        episode_reward,
        episode_ee,
        first_window_reward,
        final_window_reward,
        first_window_ee,
        final_window_ee,
        fl_rounds,
    };
    fs::write(summary_path(dir, seed), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Per-episode mean reward and EE recomputed from a metrics file.
pub fn episode_means_from_metrics(records: &[MetricsRecord]) -> (Vec<f64>, Vec<f64>) {
    let episodes = records.iter().map(|r| r.episode + 1).max().unwrap_or(0);
    let mut sums = vec![(0.0, 0.0, 0usize); episodes];
    for r in records {
        let s = &mut sums[r.episode];
        s.0 += r.reward;
        s.1 += r.ee;
        s.2 += 1;
    }
    sums.iter().map(|(r, e, n)| (r / *n as f64, e / *n as f64)).unzip()
}

/// Run every configured seed.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let summaries = cfg.seeds.iter().map(|&s| run_seed(cfg, s, out)).collect::<Result<Vec<_>>>()?;
    fs::write(out.join("config.toml"), toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?)?;
    Ok(summaries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NumLeo,
    NumElements,
    OnFraction,
    GroupSize,
    NumAntennas,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::NumLeo => "num_leo",
            SweepAxis::NumElements => "num_elements",
            SweepAxis::OnFraction => "on_fraction",
            SweepAxis::GroupSize => "group_size",
            SweepAxis::NumAntennas => "num_antennas",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "num_leo" => SweepAxis::NumLeo,
            "num_elements" => SweepAxis::NumElements,
            "on_fraction" => SweepAxis::OnFraction,
            "group_size" => SweepAxis::GroupSize,
            "num_antennas" => SweepAxis::NumAntennas,
            other => return Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        })
    }
}

fn as_count(axis: SweepAxis, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("{} needs positive integers, got {v}", axis.as_str())))
    }
}

/// Config with one axis set to `value`.
pub fn apply_axis(cfg: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::NumLeo => {
            c.scenario.num_leo = as_count(axis, value)?;
            if !c.fl.weights.is_empty() {
                return Err(Error::Config("num_leo sweep requires uniform fl weights".into()));
            }
        }
        SweepAxis::NumElements => {
            let m = as_count(axis, value)?;
            let side = (m as f64).sqrt().round() as usize;
            if side * side == m {
                c.scenario.m_h = side;
                c.scenario.m_v = side;
            } else {
                c.scenario.m_h = m;
                c.scenario.m_v = 1;
            }
        }
        SweepAxis::OnFraction => c.scenario.element_on_fraction = value,
        SweepAxis::GroupSize => {
            if c.algorithm != Algorithm::Femad || !c.fl.enabled {
                return Err(Error::Config("group_size sweep requires algorithm = \"femad\" with fl enabled".into()));
            }
            c.fl.group_size = as_count(axis, value)?;
        }
        SweepAxis::NumAntennas => c.scenario.num_antennas = as_count(axis, value)?,
    }
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub seed: u64,
    pub final_window_ee: f64,
    pub final_window_reward: f64,
}

/// One run per value under `out/<axis>_<value>/`, plus `out/sweep.csv`.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64], out: &Path) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs = values.iter().map(|&v| apply_axis(cfg, axis, v)).collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for (c, &v) in configs.iter().zip(values) {
        let dir = out.join(format!("{}_{v}", axis.as_str()));
        for s in run(c, &dir)? {
            rows.push(SweepRow {
                axis: axis.as_str().to_string(),
                value: v,
                seed: s.seed,
                final_window_ee: s.final_window_ee,
                final_window_reward: s.final_window_reward,
            });
        }
    }
    let mut file = fs::File::create(out.join("sweep.csv"))?;
    writeln!(file, "# leomf-sweep schema_version={METRICS_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(file);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

//! Federated averaging of partial target-network parameters within groups
//! of agents.

use serde::{Deserialize, Serialize};

use crate::ddpg::Maddpg;
use crate::error::{check_dim, invalid, Result};
use crate::numerics::{mix_seed, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlConfig {
    pub enabled: bool,
    /// Agents per group, formed by id order; 0 means one group of everyone.
    pub group_size: usize,
    /// Aggregation period in episodes.
    pub period: usize,
    /// Fraction of parameters exchanged per round.
    pub fraction: f64,
    /// Also exchange the target actor.
    pub include_actor: bool,
    /// Aggregation weights per agent id; empty means uniform.
    pub weights: Vec<f64>,
}

impl Default for FlConfig {
    fn default() -> Self {
        Self { enabled: true, group_size: 0, period: 5, fraction: 0.5, include_actor: false, weights: Vec::new() }
    }
}

impl FlConfig {
    pub fn validate(&self, num_agents: usize) -> Result<()> {
        if self.period == 0 {
            return Err(invalid("fl period must be >= 1"));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(invalid(format!("fl fraction must be in (0, 1], got {}", self.fraction)));
        }
        if !self.weights.is_empty() {
            check_dim("fl weights", num_agents, self.weights.len())?;
            if self.weights.iter().any(|w| !(*w >= 0.0)) {
                return Err(invalid("fl weights must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlGroup {
    pub members: Vec<usize>,
    pub period: usize,
    pub fraction: f64,
}

/// Consecutive groups of `group_size` agents by id; the last may be short.
pub fn partition(num_agents: usize, group_size: usize, period: usize, fraction: f64) -> Result<Vec<FlGroup>> {
    if num_agents == 0 {
        return Err(invalid("no agents to group"));
    }
    let size = if group_size == 0 { num_agents } else { group_size };
    Ok((0..num_agents)
        .collect::<Vec<_>>()
        .chunks(size)
        .map(|c| FlGroup { members: c.to_vec(), period, fraction })
        .collect())
}

/// Parameters at a sorted index set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSlice {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

/// Member with the best channel quality; ties go to the earliest member.
pub fn select_edge(group: &FlGroup, quality: &[f64]) -> Result<usize> {
    if group.members.is_empty() {
        return Err(invalid("empty group"));
    }
    check_dim("member qualities", group.members.len(), quality.len())?;
    let mut best = 0;
    for (i, q) in quality.iter().enumerate() {
        if *q > quality[best] {
            best = i;
        }
    }
    Ok(group.members[best])
}

/// Seeded sorted subset of `⌈fraction·p⌉` indices out of `0..p`.
pub fn slice_mask(p: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid(format!("slice fraction must be in (0, 1], got {fraction}")));
    }
    let count = ((fraction * p as f64).ceil() as usize).min(p);
    let mut idx: Vec<usize> = (0..p).collect();
    let mut rng = SeededRng::new(seed);
    for i in 0..count {
        let j = i + rng.below(p - i);
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx.sort_unstable();
    Ok(idx)
}

pub fn extract_with_mask(weights: &[f64], mask: &[usize]) -> Result<ModelSlice> {
    if let Some(&bad) = mask.iter().find(|&&i| i >= weights.len()) {
        return Err(invalid(format!("slice index {bad} out of range {}", weights.len())));
    }
    Ok(ModelSlice { indices: mask.to_vec(), values: mask.iter().map(|&i| weights[i]).collect() })
}

pub fn extract_slice(weights: &[f64], fraction: f64, seed: u64) -> Result<ModelSlice> {
    extract_with_mask(weights, &slice_mask(weights.len(), fraction, seed)?)
}

/// Weighted mean of member slices with weights normalized to sum to one.
/// Coordinates on which all members agree are passed through unchanged.
pub fn aggregate(slices: &[ModelSlice], xi: &[f64]) -> Result<ModelSlice> {
    let first = slices.first().ok_or_else(|| invalid("no slices to aggregate"))?;
    check_dim("aggregation weights", slices.len(), xi.len())?;
    for s in slices {
        if s.indices != first.indices || s.values.len() != first.values.len() {
            return Err(invalid("slice masks differ across members"));
        }
    }
    let total: f64 = xi.iter().sum();
    if !(total > 0.0) || xi.iter().any(|w| !(*w >= 0.0)) {
        return Err(invalid("aggregation weights must be >= 0 with a positive sum"));
    }
    let values = (0..first.values.len())
        .map(|j| {
            let v0 = first.values[j];
            if slices.iter().all(|s| s.values[j] == v0) {
                v0
            } else {
                slices.iter().zip(xi).map(|(s, w)| w * s.values[j]).sum::<f64>() / total
            }
        })
        .collect();
    Ok(ModelSlice { indices: first.indices.clone(), values })
}

/// Overwrite the sliced coordinates of `local` with the global values.
pub fn broadcast_merge(local: &[f64], global: &ModelSlice) -> Result<Vec<f64>> {
    check_dim("slice values", global.indices.len(), global.values.len())?;
    let mut out = local.to_vec();
    for (&i, &v) in global.indices.iter().zip(&global.values) {
        *out.get_mut(i).ok_or_else(|| invalid(format!("slice index {i} out of range {}", local.len())))? = v;
    }
    Ok(out)
}

/// Outcome of one aggregation round for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub members: Vec<usize>,
    pub edge: usize,
    pub exchanged: usize,
}

/// Aggregate each group's target critics (and optionally target actors)
/// and broadcast the result back to every member.
pub fn federated_round(
    learner: &mut Maddpg,
    groups: &[FlGroup],
    quality: &[f64],
    weights: &[f64],
    include_actor: bool,
    round_seed: u64,
) -> Result<Vec<RoundReport>> {
    let n = learner.agents().len();
    check_dim("agent qualities", n, quality.len())?;
    let xi_all: Vec<f64> = if weights.is_empty() { vec![1.0; n] } else { weights.to_vec() };
    check_dim("fl weights", n, xi_all.len())?;
    let mut reports = Vec::with_capacity(groups.len());
    for (g, group) in groups.iter().enumerate() {
        if let Some(&bad) = group.members.iter().find(|&&m| m >= n) {
            return Err(invalid(format!("group member {bad} out of range {n}")));
        }
        let q: Vec<f64> = group.members.iter().map(|&m| quality[m]).collect();
        let edge = select_edge(group, &q)?;
        let xi: Vec<f64> = group.members.iter().map(|&m| xi_all[m]).collect();
        let seed = mix_seed(round_seed, g as u64);
        let mut exchanged = 0;
        for (net_id, actor) in [(0u64, false), (1, true)] {
            if actor && !include_actor {
                continue;
            }
            let pick = |m: usize| {
                let a = &learner.agents()[m];
                if actor {
                    a.actor_target.params()
                } else {
                    a.critic_target.params()
                }
            };
            let p = pick(group.members[0]).len();
            for &m in &group.members {
                check_dim("exchanged network size", p, pick(m).len())?;
            }
            let mask = slice_mask(p, group.fraction, mix_seed(seed, net_id))?;
            let slices =
                group.members.iter().map(|&m| extract_with_mask(pick(m), &mask)).collect::<Result<Vec<_>>>()?;
            let global = aggregate(&slices, &xi)?;
            for &m in &group.members {
                let a = &mut learner.agents_mut()[m];
                let net = if actor { &mut a.actor_target } else { &mut a.critic_target };
                let merged = broadcast_merge(net.params(), &global)?;
                net.params_mut().copy_from_slice(&merged);
            }
            exchanged += mask.len();
        }
        reports.push(RoundReport { members: group.members.clone(), edge, exchanged });
    }
    Ok(reports)
}

//! Exponential-weight arm selection for one (candidate, arm size) pair.
//!
//! DRP mixes the normalized weights with a model-derived exploration prior
//! and also credits unchosen arms with a conservative reward estimate. EXP3
//! is the same table with a uniform prior and chosen-arm-only updates.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::correlation::BayesModel;
use crate::dynamic::arms::ArmSpace;
use crate::error::Result;
use crate::topology::NodeId;

/// Weights above this are rescaled; probabilities are unaffected.
const RENORMALIZE_ABOVE: f64 = 1e150;

/// What the base station observed after a trial: nodes that accessed through
/// a pre-allocated RB, with the utility of their packet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Feedback {
    pub hits: BTreeMap<NodeId, f64>,
}

impl Feedback {
    pub fn hit(&self, x: NodeId) -> Option<f64> {
        self.hits.get(&x).copied()
    }

    /// Members of `chosen` that did not access through their RB.
    pub fn failures(&self, chosen: &[NodeId]) -> BTreeSet<NodeId> {
        chosen
            .iter()
            .copied()
            .filter(|x| !self.hits.contains_key(x))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmTable {
    space: ArmSpace,
    weights: Vec<f64>,
    prior: Vec<f64>,
    trials: u64,
}

impl ArmTable {
    /// Fresh table with unit weights and the given exploration prior.
    pub fn new(space: ArmSpace, prior: Vec<f64>) -> Self {
        assert_eq!(space.len(), prior.len(), "prior must cover every arm");
        ArmTable {
            weights: vec![1.0; space.len()],
            prior,
            space,
            trials: 0,
        }
    }

    /// Fresh table exploring uniformly.
    pub fn uniform(space: ArmSpace) -> Self {
        let k = space.len();
        ArmTable::new(space, vec![1.0 / k as f64; k])
    }

    pub fn space(&self) -> &ArmSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Arm probabilities: `(1 - gamma) * w_j / sum(w) + gamma * prior_j`.
    pub fn probabilities(&self, gamma: f64) -> Vec<f64> {
        mix(&self.weights, &self.prior, gamma)
    }

    /// Divides every weight by the largest one.
    pub fn renormalize(&mut self) {
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            self.weights.iter_mut().for_each(|w| *w /= max);
        }
    }

    fn scale(&mut self, j: usize, gamma: f64, estimate: f64) {
        let k = self.weights.len() as f64;
        self.weights[j] *= (gamma * estimate / k).exp();
    }

    fn finish_update(&mut self) {
        self.trials += 1;
        if self.weights.iter().any(|&w| w > RENORMALIZE_ABOVE) {
            self.renormalize();
        }
    }
}

pub(crate) fn mix(weights: &[f64], prior: &[f64], gamma: f64) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .zip(prior)
        .map(|(w, p)| (1.0 - gamma) * w / total + gamma * p)
        .collect()
}

/// Exploration prior over arms: the product of `phi(x | y)` over each arm's
/// members, normalized across the arm space.
pub fn arm_prior(model: &BayesModel, y: NodeId, space: &ArmSpace) -> Result<Vec<f64>> {
    let logs = space
        .arms()
        .iter()
        .map(|arm| {
            arm.iter()
                .map(|&x| model.cond_prob(x, y).map(f64::ln))
                .sum::<Result<f64>>()
        })
        .collect::<Result<Vec<f64>>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|r| r / total).collect())
}

fn sample(probs: &[f64], rng: &mut impl Rng) -> usize {
    WeightedIndex::new(probs)
        .expect("arm probabilities are a valid distribution")
        .sample(rng)
}

/// Draws an arm; returns its index and the distribution it was drawn from.
pub fn drp_select(table: &ArmTable, gamma: f64, rng: &mut impl Rng) -> (usize, Vec<f64>) {
    let probs = table.probabilities(gamma);
    (sample(&probs, rng), probs)
}

/// Reward of the chosen arm: utilities of its hits minus `beta` per miss,
/// averaged over `delta` and clamped to `[0, 1]`.
pub fn drp_reward(chosen: &[NodeId], feedback: &Feedback, delta: usize, beta: f64) -> f64 {
    let mut total = 0.0;
    for &x in chosen {
        match feedback.hit(x) {
            Some(u) => total += u,
            None => total -= beta,
        }
    }
    (total / delta as f64).clamp(0.0, 1.0)
}

/// Reward estimate of an unchosen arm. Hits are credited only if observed;
/// penalties apply only to members that failed inside the chosen arm. The
/// estimate never exceeds the chosen arm's reward.
pub fn drp_estimate_others(
    arm: &[NodeId],
    feedback: &Feedback,
    failed: &BTreeSet<NodeId>,
    delta: usize,
    beta: f64,
    chosen_reward: f64,
) -> f64 {
    let mut total = 0.0;
    for x in arm {
        if let Some(u) = feedback.hit(*x) {
            total += u;
        }
        if failed.contains(x) {
            total -= beta;
        }
    }
    (total / delta as f64).min(chosen_reward).clamp(0.0, 1.0)
}

/// Rewards of every arm after one trial: observed for `chosen`, estimated
/// for the rest.
pub fn drp_rewards(
    space: &ArmSpace,
    chosen: usize,
    feedback: &Feedback,
    beta: f64,
) -> Vec<f64> {
    let delta = space.delta();
    let chosen_arm = space.arm(chosen);
    let r_chosen = drp_reward(chosen_arm, feedback, delta, beta);
    let failed = feedback.failures(chosen_arm);
    space
        .arms()
        .iter()
        .enumerate()
        .map(|(j, arm)| {
            if j == chosen {
                r_chosen
            } else {
                drp_estimate_others(arm, feedback, &failed, delta, beta, r_chosen)
            }
        })
        .collect()
}

/// Importance-weighted update of every arm. The chosen arm divides by its
/// probability; the others by `max(P, 1 - P)`.
pub fn drp_update(
    table: &mut ArmTable,
    gamma: f64,
    chosen: usize,
    probs: &[f64],
    rewards: &[f64],
) {
    for j in 0..table.len() {
        let p = probs[j];
        let estimate = if j == chosen {
            rewards[j] / p
        } else {
            rewards[j] / p.max(1.0 - p)
        };
        table.scale(j, gamma, estimate);
    }
    table.finish_update();
}

/// EXP3 draw: uniform exploration regardless of the table's prior.
pub fn exp3_select(table: &ArmTable, gamma: f64, rng: &mut impl Rng) -> (usize, Vec<f64>) {
    let k = table.len();
    let probs = mix(table.weights(), &vec![1.0 / k as f64; k], gamma);
    (sample(&probs, rng), probs)
}

/// EXP3 update: only the chosen arm moves.
pub fn exp3_update(table: &mut ArmTable, gamma: f64, chosen: usize, probs: &[f64], reward: f64) {
    table.scale(chosen, gamma, reward / probs[chosen]);
    table.finish_update();
}

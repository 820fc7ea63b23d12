//! Empirical regret against the best fixed arm in hindsight.
//!
//! An oblivious adversary fixes, for every trial, which ground nodes would
//! access through a reserved RB and with what utility. An arm is a subset of
//! the ground nodes; its true reward is the chosen-arm reward evaluated on
//! that trial's outcomes. The learner only observes the outcomes of the arm
//! it reserved.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::dynamic::arms::ArmSpace;
use crate::dynamic::bandit::{
    drp_reward, drp_rewards, drp_select, drp_update, exp3_select, exp3_update, ArmTable,
    Feedback,
};
use crate::dynamic::regret::{regret_bound_drp, regret_bound_exp3};
use crate::error::{config_err, Result};
use crate::rng;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Learner {
    Drp,
    Exp3,
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Learner::Drp => "DRP",
            Learner::Exp3 => "EXP3",
        })
    }
}

/// Per-trial outcomes: `outcomes[s][i]` is the utility node `i` delivers if
/// reserved in trial `s`, or `None` if it would not transmit.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardAssignment {
    space: ArmSpace,
    outcomes: Vec<Vec<Option<f64>>>,
}

impl RewardAssignment {
    /// Seeded piecewise-stationary adversary over `k` arms and `horizon`
    /// trials. Ground set size and arm size are chosen so that there are
    /// exactly `k` arms: `k` nodes, arms of `k - 1`.
    pub fn adversarial(k: usize, horizon: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(config_err("the harness needs at least two arms"));
        }
        let members: Vec<NodeId> = (1..=k as u32).map(NodeId).collect();
        let space = ArmSpace::new(&members, k - 1)?;
        let mut rng = rng::stream(seed, 0x5eed);
        let segments = rng.gen_range(1..=4usize);
        let mut cuts: Vec<usize> = (0..segments - 1).map(|_| rng.gen_range(0..horizon)).collect();
        cuts.push(horizon);
        cuts.sort_unstable();

        let mut outcomes = Vec::with_capacity(horizon);
        let mut start = 0;
        for end in cuts {
            let probs: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            let utils: Vec<(f64, f64)> = (0..k)
                .map(|_| {
                    let lo = rng.gen_range(0.2..0.9);
                    (lo, rng.gen_range(lo..=1.0))
                })
                .collect();
            for _ in start..end {
                outcomes.push(
                    (0..k)
                        .map(|i| {
                            rng.gen_bool(probs[i])
                                .then(|| rng.gen_range(utils[i].0..=utils[i].1))
                        })
                        .collect(),
                );
            }
            start = end;
        }
        Ok(RewardAssignment { space, outcomes })
    }

    pub fn space(&self) -> &ArmSpace {
        &self.space
    }

    pub fn horizon(&self) -> usize {
        self.outcomes.len()
    }

    /// What the learner sees after reserving `arm` in trial `s`.
    fn observe(&self, s: usize, arm: &[NodeId]) -> Feedback {
        let hits = arm
            .iter()
            .filter_map(|&x| self.outcomes[s][x.0 as usize - 1].map(|u| (x, u)))
            .collect();
        Feedback { hits }
    }

    /// True reward of arm `j` in trial `s`.
    pub fn reward(&self, s: usize, j: usize, beta: f64) -> f64 {
        let arm = self.space.arm(j);
        drp_reward(arm, &self.observe(s, arm), self.space.delta(), beta)
    }

    /// Gain of the best fixed arm, by exhaustive search.
    pub fn best_fixed_gain(&self, beta: f64) -> f64 {
        (0..self.space.len())
            .map(|j| (0..self.horizon()).map(|s| self.reward(s, j, beta)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Total reward collected by `learner` with exploration `gamma`.
    pub fn play(&self, learner: Learner, gamma: f64, beta: f64, rng: &mut impl Rng) -> f64 {
        let mut table = ArmTable::uniform(self.space.clone());
        let delta = self.space.delta();
        let mut gain = 0.0;
        for s in 0..self.horizon() {
            match learner {
                Learner::Drp => {
                    let (j, probs) = drp_select(&table, gamma, rng);
                    let feedback = self.observe(s, self.space.arm(j));
                    let rewards = drp_rewards(&self.space, j, &feedback, beta);
                    gain += rewards[j];
                    drp_update(&mut table, gamma, j, &probs, &rewards);
                }
                Learner::Exp3 => {
                    let (j, probs) = exp3_select(&table, gamma, rng);
                    let feedback = self.observe(s, self.space.arm(j));
                    let r = drp_reward(self.space.arm(j), &feedback, delta, beta);
                    gain += r;
                    exp3_update(&mut table, gamma, j, &probs, r);
                }
            }
        }
        gain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretRow {
    pub seed: u64,
    pub arms: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub learner: Learner,
    /// Mean gain over policy seeds.
    pub gain: f64,
    pub best_gain: f64,
    pub regret: f64,
    pub bound: f64,
}

impl RegretRow {
    pub fn within_bound(&self) -> bool {
        self.regret <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub arms: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub beta: f64,
    pub policy_seeds: u32,
}

/// Regret of each learner on the assignment generated from `seed`, averaged
/// over `policy_seeds` runs.
pub fn evaluate(seed: u64, cfg: &HarnessConfig, learners: &[Learner]) -> Result<Vec<RegretRow>> {
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(config_err(format!("gamma {} outside (0, 1]", cfg.gamma)));
    }
    if cfg.policy_seeds == 0 {
        return Err(config_err("at least one policy seed is required"));
    }
    let assignment = RewardAssignment::adversarial(cfg.arms, cfg.horizon, seed)?;
    let best = assignment.best_fixed_gain(cfg.beta);
    let rows = learners
        .iter()
        .map(|&learner| {
            let total: f64 = (0..cfg.policy_seeds)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng::stream(seed.wrapping_mul(1_000_003) ^ i as u64, rng::STREAM_POLICY);
                    assignment.play(learner, cfg.gamma, cfg.beta, &mut rng)
                })
                .sum();
            let gain = total / cfg.policy_seeds as f64;
            let bound = match learner {
                Learner::Drp => regret_bound_drp(cfg.arms, cfg.gamma, best),
                Learner::Exp3 => regret_bound_exp3(cfg.arms, cfg.gamma, best),
            };
            RegretRow {
                seed,
                arms: cfg.arms,
                horizon: cfg.horizon,
                gamma: cfg.gamma,
                learner,
                gain,
                best_gain: best,
                regret: best - gain,
                bound,
            }
        })
        .collect();
    Ok(rows)
}

pub fn write_regret_csv<W: Write>(rows: &[RegretRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "K", "S", "gamma", "algo", "G_alg", "G_max", "regret", "bound"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.arms.to_string(),
            r.horizon.to_string(),
            format!("{:.6}", r.gamma),
            r.learner.to_string(),
            format!("{:.6}", r.gain),
            format!("{:.6}", r.best_gain),
            format!("{:.6}", r.regret),
            format!("{:.6}", r.bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}

//! TTI-level simulation of the two-stage pre-allocation loop and the
//! adjacency baselines.
//!
//! Each TTI: new triggers join the pending queue; candidates are the previous
//! TTI's accessors; reserved RBs are split across candidates and filled with
//! arms; pending packets use a reservation if one reaches them before their
//! conventional grant; and reservation windows that have closed are scored
//! and fed back to the bandits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};

use crate::correlation::{BayesModel, CorrelationMetric};
use crate::dynamic::allocation::{allocate_reserved, largest_remainder};
use crate::dynamic::arms::ArmSpace;
use crate::dynamic::bandit::{
    arm_prior, drp_reward, drp_rewards, drp_update, exp3_update, mix, ArmTable, Feedback,
};
use crate::dynamic::utility::UtilityParams;
use crate::error::{config_err, Error, Result};
use crate::rng::{self, SimRng};
use crate::samples::{
    extract_samples, update_corpus, AccessPath, AccessRecord, Corpus, SampleConfig,
};
use crate::static_stage::{epoch_step, StaticConfig, StaticPlan};
use crate::topology::{
    build_topology, conventional_access_delay, nearest_nodes, node_index, Node, NodeId,
    SensingType, TrafficConfig, TrafficGenerator, TriggerEvent, Tti,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algo {
    /// Learned candidates and sets, DRP with delay utility.
    DPre,
    /// As `DPre`, but every delivery is worth 1 regardless of delay.
    DPreWqos,
    /// Learned candidates and sets, uniform-exploration EXP3.
    Exp3,
    /// Every accessor is a candidate and reserves its nearest nodes.
    APre,
    /// Every accessor is a candidate; DRP over its nearest nodes.
    APreD,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::DPre, Algo::DPreWqos, Algo::Exp3, Algo::APre, Algo::APreD];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::DPre => "DPre",
            Algo::DPreWqos => "DPre-wQoS",
            Algo::Exp3 => "EXP3",
            Algo::APre => "APre",
            Algo::APreD => "APre-D",
        }
    }

    /// Whether candidates and reservation sets come from the static stage.
    pub fn uses_plan(self) -> bool {
        matches!(self, Algo::DPre | Algo::DPreWqos | Algo::Exp3)
    }

    fn reward_utility(self, t: SensingType, latency: u32) -> f64 {
        match self {
            Algo::DPreWqos => 1.0,
            _ => type_utility(t, latency),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Ok(match key.as_str() {
            "dpre" | "drp" | "dpreqos" => Algo::DPre,
            "dprewqos" | "drpwqos" => Algo::DPreWqos,
            "exp3" => Algo::Exp3,
            "apre" => Algo::APre,
            "apred" => Algo::APreD,
            _ => return Err(config_err(format!("unknown algorithm `{s}`"))),
        })
    }
}

/// Delay utility of a delivery; sensors without a deadline always score 1.
pub fn type_utility(t: SensingType, latency: u32) -> f64 {
    UtilityParams::for_type(t).map_or(1.0, |p| p.utility(latency as f64))
}

fn deadline(t: SensingType) -> Option<f64> {
    UtilityParams::for_type(t).map(|p| p.delay_threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Reserved RBs available per TTI.
    pub n_res: usize,
    pub metric: CorrelationMetric,
    pub algo: Algo,
    pub gamma: f64,
    /// Per-miss penalty in the reward.
    pub beta: f64,
    pub static_cfg: StaticConfig,
    pub sample_cfg: SampleConfig,
    pub traffic: TrafficConfig,
    /// Trials after the bootstrap.
    pub n_trials: u32,
    /// Conventional-only trials that seed the first corpus.
    pub bootstrap_trials: u32,
    /// TTIs a reserved RB stays usable, counting the TTI it was made in.
    pub reservation_window: u32,
    /// Nearest-node set size for the adjacency baselines.
    pub adjacency_size: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_res: 6,
            metric: CorrelationMetric::ChiSquare,
            algo: Algo::DPre,
            gamma: 0.3,
            beta: 0.1,
            static_cfg: StaticConfig::default(),
            sample_cfg: SampleConfig::default(),
            traffic: TrafficConfig::desk(),
            n_trials: 100,
            bootstrap_trials: 100,
            reservation_window: 5,
            adjacency_size: 8,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(config_err(format!(
                "gamma = {} is outside (0, 1]: the arm distribution needs a positive \
                 exploration share and the regret bound is undefined at 0",
                self.gamma
            )));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(config_err(format!("beta = {} must be a finite value >= 0", self.beta)));
        }
        if self.n_trials == 0 {
            return Err(config_err("n_trials must be at least 1"));
        }
        if self.bootstrap_trials == 0 && self.algo.uses_plan() {
            return Err(config_err("learned algorithms need at least one bootstrap trial"));
        }
        if self.reservation_window == 0 {
            return Err(config_err("reservation window must be at least 1 TTI"));
        }
        if self.adjacency_size == 0 {
            return Err(config_err("adjacency set size must be at least 1"));
        }
        self.static_cfg.validate()?;
        self.static_cfg.threshold(self.metric)?;
        self.sample_cfg.validate()?;
        self.traffic.validate()
    }

    fn traffic(&self) -> TrafficConfig {
        TrafficConfig {
            seed: self.seed,
            ..self.traffic.clone()
        }
    }
}

/// A reserved RB's fate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservationOutcome {
    /// 1-based trial index after the bootstrap.
    pub trial: u32,
    pub node: NodeId,
    pub made: Tti,
    /// Latency of the packet that used it, if any.
    pub latency: Option<u32>,
    /// Delay threshold of the node's type; `None` for sensors without one.
    pub deadline: Option<f64>,
}

impl ReservationOutcome {
    pub fn hit(&self) -> bool {
        self.latency.is_some()
    }

    pub fn on_time(&self) -> bool {
        match (self.latency, self.deadline) {
            (Some(l), Some(b)) => l as f64 <= b,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

/// One served packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Service {
    pub node: NodeId,
    pub trigger_tti: Tti,
    pub access_tti: Tti,
    pub path: AccessPath,
    pub latency: u32,
    /// Latency the conventional path would have had.
    pub conventional_latency: u32,
    /// 1-based trial index after the bootstrap; 0 during the bootstrap.
    pub trial: u32,
}

/// One bandit decision, logged once its reservation window has closed.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionLog {
    pub tti: Tti,
    pub candidate: NodeId,
    pub arm: Vec<NodeId>,
    pub hits: usize,
    pub misses: usize,
    pub reward: f64,
}

/// What happened in one TTI.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TtiState {
    pub tti: Tti,
    /// Candidates, ascending.
    pub theta: Vec<NodeId>,
    /// Nodes reserved this TTI with their owning candidate.
    pub omega: Vec<(NodeId, NodeId)>,
    /// Reserved RBs active after this TTI's reservations were placed.
    pub active_reservations: usize,
    /// Accessed through a reserved RB.
    pub s_set: Vec<NodeId>,
    /// Accessed conventionally.
    pub c_set: Vec<NodeId>,
    pub pending: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialStats {
    pub accesses: usize,
    pub latency_sum: u64,
    pub utility_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algo: Algo,
    pub metric: CorrelationMetric,
    pub gamma: f64,
    pub n_trials: u32,
    pub n_triggers: usize,
    pub services: Vec<Service>,
    pub reservations: Vec<ReservationOutcome>,
    pub decisions: Vec<DecisionLog>,
    pub trial_stats: Vec<TrialStats>,
    /// Largest number of simultaneously held reserved RBs.
    pub max_active_reservations: usize,
    pub samples_extracted: usize,
    pub records_fed: usize,
    pub final_plan: StaticPlan,
}

impl RunReport {
    pub fn accuracy(&self, qos_aware: bool) -> Vec<f64> {
        accuracy(&self.reservations, self.n_trials, qos_aware)
    }

    pub fn mean_latency(&self) -> Vec<f64> {
        self.trial_stats
            .iter()
            .map(|s| ratio(s.latency_sum as f64, s.accesses))
            .collect()
    }

    pub fn mean_utility(&self) -> Vec<f64> {
        self.trial_stats
            .iter()
            .map(|s| ratio(s.utility_sum, s.accesses))
            .collect()
    }

    pub fn trial_rows(&self) -> Vec<TrialRow> {
        let acc = self.accuracy(false);
        let qos = self.accuracy(true);
        let lat = self.mean_latency();
        let util = self.mean_utility();
        (0..self.n_trials as usize)
            .map(|i| TrialRow {
                trial: i as u32 + 1,
                accuracy: acc[i],
                qos_accuracy: qos[i],
                mean_latency: lat[i],
                mean_utility: util[i],
            })
            .collect()
    }
}

/// Per-trial summary values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub trial: u32,
    pub accuracy: f64,
    pub qos_accuracy: f64,
    pub mean_latency: f64,
    pub mean_utility: f64,
}

impl TrialRow {
    pub const FIELDS: [&'static str; 4] = ["accuracy", "qos_accuracy", "mean_latency", "mean_utility"];

    pub fn values(&self) -> [f64; 4] {
        [self.accuracy, self.qos_accuracy, self.mean_latency, self.mean_utility]
    }
}

fn ratio(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

/// Used reservations over all reservations, per trial. A trial without
/// reservations scores 0. With `qos_aware`, a use counts only if the packet
/// met its type's delay threshold.
pub fn accuracy(outcomes: &[ReservationOutcome], n_trials: u32, qos_aware: bool) -> Vec<f64> {
    let mut made = vec![0usize; n_trials as usize];
    let mut good = vec![0usize; n_trials as usize];
    for o in outcomes {
        let Some(i) = (o.trial as usize).checked_sub(1).filter(|&i| i < made.len()) else {
            continue;
        };
        made[i] += 1;
        if (qos_aware && o.on_time()) || (!qos_aware && o.hit()) {
            good[i] += 1;
        }
    }
    made.iter()
        .zip(&good)
        .map(|(&m, &g)| ratio(g as f64, m))
        .collect()
}

#[derive(Debug, Clone)]
struct Packet {
    node: NodeId,
    trigger: Tti,
    conventional_at: Tti,
    trial: u32,
}

#[derive(Debug, Clone)]
struct Reservation {
    node: NodeId,
    last: Tti,
    outcome: usize,
}

#[derive(Debug, Clone)]
struct Decision {
    tti: Tti,
    candidate: NodeId,
    key: (NodeId, usize),
    members: Vec<NodeId>,
    chosen: usize,
    probs: Vec<f64>,
    resolve_at: Tti,
}

/// Simulation state. `run` drives it over a full experiment; `step` advances
/// a single TTI for scripted scenarios.
pub struct Simulator {
    cfg: RunConfig,
    nodes: Vec<Node>,
    vocab: Vec<NodeId>,
    neighbours: Vec<Vec<NodeId>>,
    policy_rng: SimRng,
    delay_rng: SimRng,
    tti: Tti,
    trial: u32,
    dynamic: bool,
    model: Option<BayesModel>,
    plan: StaticPlan,
    corpus: Corpus,
    tables: BTreeMap<(NodeId, usize), ArmTable>,
    pending: Vec<Packet>,
    active: Vec<Reservation>,
    decisions: Vec<Decision>,
    recent_hits: Vec<(Tti, NodeId, f64)>,
    prev_accessors: Vec<NodeId>,
    records: Vec<AccessRecord>,
    report: RunReport,
}

impl Simulator {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let nodes = build_topology(&cfg.traffic())?;
        Ok(Simulator::with_nodes(cfg, nodes))
    }

    /// Simulator over a given population. The config is not validated.
    pub fn with_nodes(cfg: &RunConfig, nodes: Vec<Node>) -> Self {
        let vocab: Vec<NodeId> = nodes.iter().map(|n| n.id).collect();
        let neighbours = if cfg.algo.uses_plan() {
            Vec::new()
        } else {
            vocab
                .iter()
                .map(|&y| nearest_nodes(&nodes, y, nodes.len()))
                .collect()
        };
        let xi = cfg.static_cfg.set_size;
        let alpha = cfg.static_cfg.threshold(cfg.metric).unwrap_or(0.0);
        Simulator {
            nodes,
            vocab,
            neighbours,
            policy_rng: rng::stream(cfg.seed, rng::STREAM_POLICY),
            delay_rng: rng::stream(cfg.seed, rng::STREAM_DELAYS),
            tti: 0,
            trial: 0,
            dynamic: false,
            model: None,
            plan: StaticPlan::empty(cfg.metric, alpha, xi),
            corpus: Corpus::new(),
            tables: BTreeMap::new(),
            pending: Vec::new(),
            active: Vec::new(),
            decisions: Vec::new(),
            recent_hits: Vec::new(),
            prev_accessors: Vec::new(),
            records: Vec::new(),
            report: RunReport {
                algo: cfg.algo,
                metric: cfg.metric,
                gamma: cfg.gamma,
                n_trials: cfg.n_trials,
                n_triggers: 0,
                services: Vec::new(),
                reservations: Vec::new(),
                decisions: Vec::new(),
                trial_stats: vec![TrialStats::default(); cfg.n_trials as usize],
                max_active_reservations: 0,
                samples_extracted: 0,
                records_fed: 0,
                final_plan: StaticPlan::empty(cfg.metric, alpha, xi),
            },
            cfg: cfg.clone(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn plan(&self) -> &StaticPlan {
        &self.plan
    }

    pub fn tti(&self) -> Tti {
        self.tti
    }

    /// Installs a trained model and plan, as the static stage would at an
    /// epoch boundary. Bandit tables whose reservation set changed are reset.
    pub fn install(&mut self, model: Option<BayesModel>, plan: StaticPlan) {
        self.tables
            .retain(|&(y, _), table| plan.members(y) == table.space().members());
        self.model = model;
        self.plan = plan;
    }

    /// Enables or disables reservations. `trial` is the 1-based index that
    /// new packets and reservations are booked under; 0 means bootstrap.
    pub fn set_phase(&mut self, dynamic: bool, trial: u32) {
        self.dynamic = dynamic;
        self.trial = trial;
    }

    /// Advances one TTI. `triggers` are the events whose trigger TTI is the
    /// current TTI.
    pub fn step(&mut self, triggers: &[TriggerEvent]) -> TtiState {
        let t = self.tti;
        debug_assert!(triggers.iter().all(|e| e.tti == t));
        let mut state = TtiState {
            tti: t,
            ..TtiState::default()
        };

        for e in triggers {
            let delay = conventional_access_delay(self.cfg.traffic.conventional_delay_range, &mut self.delay_rng);
            self.pending.push(Packet {
                node: e.node,
                trigger: t,
                conventional_at: t + delay as Tti,
                trial: self.trial,
            });
            self.report.n_triggers += 1;
        }

        if self.dynamic && self.cfg.n_res > 0 {
            let theta: Vec<NodeId> = if self.cfg.algo.uses_plan() {
                self.prev_accessors
                    .iter()
                    .copied()
                    .filter(|&y| self.plan.is_candidate(y))
                    .collect()
            } else {
                self.prev_accessors.clone()
            };
            state.omega = self.reserve(&theta);
            state.theta = theta;
        }
        state.active_reservations = self.active.len();
        self.report.max_active_reservations =
            self.report.max_active_reservations.max(self.active.len());

        self.serve(&mut state);

        self.active.retain(|r| r.last > t);
        self.resolve(t);
        // Decisions still open were made after t + 1 - window.
        let window = self.cfg.reservation_window as Tti;
        self.recent_hits.retain(|&(tti, _, _)| tti + window > t + 1);

        let mut accessors: Vec<NodeId> = state.s_set.iter().chain(&state.c_set).copied().collect();
        accessors.sort_unstable();
        accessors.dedup();
        self.prev_accessors = accessors;
        state.pending = self.pending.len();
        self.tti += 1;
        state
    }

    fn reserve(&mut self, theta: &[NodeId]) -> Vec<(NodeId, NodeId)> {
        let free = self.cfg.n_res.saturating_sub(self.active.len());
        if theta.is_empty() || free == 0 {
            return Vec::new();
        }
        let shares = if self.cfg.algo.uses_plan() {
            allocate_reserved(theta, &self.plan, free)
        } else {
            let cap = match self.cfg.algo {
                Algo::APreD => self.cfg.adjacency_size,
                _ => usize::MAX,
            };
            let claims: Vec<_> = theta.iter().map(|&y| (y, 1.0, cap)).collect();
            largest_remainder(&claims, free)
        };

        let mut owned: BTreeSet<NodeId> = self.active.iter().map(|r| r.node).collect();
        let mut omega = Vec::new();
        for &y in theta {
            let delta = shares.get(&y).copied().unwrap_or(0);
            if delta == 0 {
                continue;
            }
            let reserved = match self.cfg.algo {
                Algo::APre => {
                    let nodes: Vec<NodeId> = self.neighbours[node_index(y)]
                        .iter()
                        .copied()
                        .filter(|x| !owned.contains(x))
                        .take(delta)
                        .collect();
                    self.log_fixed(y, &nodes);
                    nodes
                }
                _ => self.draw_arm(y, delta, &owned),
            };
            for &x in &reserved {
                owned.insert(x);
                omega.push((x, y));
                self.report.reservations.push(ReservationOutcome {
                    trial: self.trial,
                    node: x,
                    made: self.tti,
                    latency: None,
                    deadline: deadline(self.nodes[node_index(x)].sensing_type),
                });
                self.active.push(Reservation {
                    node: x,
                    last: self.tti + self.cfg.reservation_window as Tti - 1,
                    outcome: self.report.reservations.len() - 1,
                });
            }
        }
        omega
    }

    /// Records an APre reservation so its reward shows up in the TTI log.
    fn log_fixed(&mut self, y: NodeId, nodes: &[NodeId]) {
        if nodes.is_empty() {
            return;
        }
        self.decisions.push(Decision {
            tti: self.tti,
            candidate: y,
            key: (y, 0),
            members: nodes.to_vec(),
            chosen: 0,
            probs: Vec::new(),
            resolve_at: self.tti + self.cfg.reservation_window as Tti - 1,
        });
    }

    /// Picks an arm of size `delta` for `y`, avoiding nodes another
    /// reservation already holds. Returns the nodes actually reserved.
    fn draw_arm(&mut self, y: NodeId, delta: usize, owned: &BTreeSet<NodeId>) -> Vec<NodeId> {
        let members: Vec<NodeId> = match self.cfg.algo {
            Algo::APreD => self.neighbours[node_index(y)]
                .iter()
                .copied()
                .take(self.cfg.adjacency_size)
                .collect(),
            _ => self.plan.members(y),
        };
        let delta = delta.min(members.len());
        if delta == 0 {
            return Vec::new();
        }
        let key = (y, delta);
        if !self.tables.contains_key(&key) {
            let Ok(space) = ArmSpace::new(&members, delta) else {
                return Vec::new();
            };
            let table = match (self.cfg.algo, &self.model) {
                (Algo::DPre | Algo::DPreWqos, Some(model)) => match arm_prior(model, y, &space) {
                    Ok(prior) => ArmTable::new(space, prior),
                    Err(_) => ArmTable::uniform(space),
                },
                _ => ArmTable::uniform(space),
            };
            self.tables.insert(key, table);
        }
        let table = &self.tables[&key];
        let space = table.space();
        let probs = match self.cfg.algo {
            Algo::Exp3 => {
                let k = table.len();
                mix(table.weights(), &vec![1.0 / k as f64; k], self.cfg.gamma)
            }
            _ => table.probabilities(self.cfg.gamma),
        };

        // Condition on arms that share no node with an existing reservation.
        let eligible: Vec<bool> = space
            .arms()
            .iter()
            .map(|arm| arm.iter().all(|x| !owned.contains(x)))
            .collect();
        let conditioned: Vec<f64> = probs
            .iter()
            .zip(&eligible)
            .map(|(&p, &ok)| if ok { p } else { 0.0 })
            .collect();
        let mass: f64 = conditioned.iter().sum();
        let (chosen, used_probs) = if mass > 0.0 {
            let cond: Vec<f64> = conditioned.iter().map(|p| p / mass).collect();
            let j = WeightedIndex::new(&cond)
                .expect("conditioned distribution has positive mass")
                .sample(&mut self.policy_rng);
            (j, cond)
        } else {
            let j = WeightedIndex::new(&probs)
                .expect("arm distribution has positive mass")
                .sample(&mut self.policy_rng);
            (j, probs)
        };
        let arm = space.arm(chosen).to_vec();
        self.decisions.push(Decision {
            tti: self.tti,
            candidate: y,
            key,
            members: space.members().to_vec(),
            chosen,
            probs: used_probs,
            resolve_at: self.tti + self.cfg.reservation_window as Tti - 1,
        });
        arm.into_iter().filter(|x| !owned.contains(x)).collect()
    }

    fn serve(&mut self, state: &mut TtiState) {
        let t = self.tti;
        self.pending.sort_by_key(|p| (p.trigger, p.node));
        let mut remaining = Vec::with_capacity(self.pending.len());
        for p in std::mem::take(&mut self.pending) {
            let conventional_latency = (p.conventional_at - p.trigger) as u32;
            let sensing = self.nodes[node_index(p.node)].sensing_type;
            let pre_latency = (t - p.trigger + 1) as u32;
            let slot = if t < p.conventional_at && pre_latency < conventional_latency {
                self.active.iter().position(|r| r.node == p.node)
            } else {
                None
            };
            let (path, latency) = if let Some(i) = slot {
                let r = self.active.swap_remove(i);
                self.report.reservations[r.outcome].latency = Some(pre_latency);
                let u = self.cfg.algo.reward_utility(sensing, pre_latency);
                self.recent_hits.push((t, p.node, u));
                state.s_set.push(p.node);
                (AccessPath::PreAllocated, pre_latency)
            } else if t == p.conventional_at {
                state.c_set.push(p.node);
                (AccessPath::Conventional, conventional_latency)
            } else {
                remaining.push(p);
                continue;
            };
            self.records.push(AccessRecord {
                node: p.node,
                access_tti: t,
                path,
                latency,
            });
            if p.trial > 0 {
                let s = &mut self.report.trial_stats[p.trial as usize - 1];
                s.accesses += 1;
                s.latency_sum += latency as u64;
                s.utility_sum += type_utility(sensing, latency);
            }
            self.report.services.push(Service {
                node: p.node,
                trigger_tti: p.trigger,
                access_tti: t,
                path,
                latency,
                conventional_latency,
                trial: p.trial,
            });
        }
        self.pending = remaining;
    }

    /// Scores decisions whose reservation window ends at `t` and updates
    /// their bandit tables.
    fn resolve(&mut self, t: Tti) {
        let (due, rest): (Vec<Decision>, Vec<Decision>) =
            std::mem::take(&mut self.decisions).into_iter().partition(|d| d.resolve_at <= t);
        self.decisions = rest;
        for d in due {
            let mut feedback = Feedback::default();
            for &(tti, x, u) in &self.recent_hits {
                if tti >= d.tti && tti <= d.resolve_at {
                    feedback.hits.entry(x).or_insert(u);
                }
            }
            let (arm, delta) = match self.tables.get(&d.key) {
                Some(table) if d.key.1 > 0 && table.space().members() == d.members.as_slice() => {
                    (table.space().arm(d.chosen).to_vec(), table.space().delta())
                }
                _ if d.key.1 == 0 => (d.members.clone(), d.members.len()),
                // The set changed at an epoch boundary; nothing left to update.
                _ => continue,
            };
            let reward = drp_reward(&arm, &feedback, delta, self.cfg.beta);
            let hits = arm.iter().filter(|x| feedback.hits.contains_key(x)).count();
            self.report.decisions.push(DecisionLog {
                tti: d.tti,
                candidate: d.candidate,
                hits,
                misses: arm.len() - hits,
                arm,
                reward,
            });
            let gamma = self.cfg.gamma;
            let beta = self.cfg.beta;
            match self.cfg.algo {
                Algo::APre => {}
                Algo::Exp3 => {
                    let table = self.tables.get_mut(&d.key).expect("checked above");
                    exp3_update(table, gamma, d.chosen, &d.probs, reward);
                }
                _ => {
                    let table = self.tables.get_mut(&d.key).expect("checked above");
                    let rewards = drp_rewards(table.space(), d.chosen, &feedback, beta);
                    drp_update(table, gamma, d.chosen, &d.probs, &rewards);
                }
            }
        }
    }

    /// Adds the records gathered since the last call to the corpus under
    /// `epoch` and rebuilds the model and plan.
    fn retrain(&mut self, epoch: u32) -> Result<()> {
        let records = std::mem::take(&mut self.records);
        let samples = extract_samples(&records, &self.nodes, &self.cfg.sample_cfg)?;
        self.report.records_fed += records.len();
        self.report.samples_extracted += samples.len();
        let corpus = std::mem::take(&mut self.corpus);
        self.corpus = update_corpus(corpus, epoch, samples, &self.cfg.sample_cfg);
        if !self.cfg.algo.uses_plan() {
            return Ok(());
        }
        match epoch_step(&self.corpus.to_vec(), &self.vocab, self.cfg.metric, &self.cfg.static_cfg) {
            Ok((model, plan)) => self.install(Some(model), plan),
            Err(Error::Training(_)) => {
                let empty = StaticPlan::empty(self.cfg.metric, self.plan.alpha, self.plan.xi);
                self.install(None, empty);
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }

    /// Bootstrap, then alternating epochs of retraining and simulation, then
    /// a drain until every packet is served and every window has closed.
    pub fn run(mut self) -> Result<RunReport> {
        let cfg = self.cfg.clone();
        let mut gen = TrafficGenerator::new(&self.nodes, &cfg.traffic())?;
        let trial_ttis = cfg.traffic.trial_ttis();
        let total = cfg.bootstrap_trials + cfg.n_trials;
        let mut epoch = 0;

        for k in 0..total {
            let after = k.checked_sub(cfg.bootstrap_trials);
            if let Some(i) = after {
                if i % cfg.sample_cfg.epoch_length == 0 {
                    self.retrain(epoch)?;
                    epoch += 1;
                    if i > 0 {
                        gen.start_epoch();
                    }
                }
            }
            self.set_phase(after.is_some(), after.map_or(0, |i| i + 1));
            let events = gen.trial(k);
            let mut next = 0;
            for _ in 0..trial_ttis {
                let t = self.tti;
                let end = next + events[next..].partition_point(|e| e.tti == t);
                self.step(&events[next..end]);
                next = end;
            }
        }

        self.dynamic = false;
        while !self.pending.is_empty() || !self.active.is_empty() || !self.decisions.is_empty() {
            self.step(&[]);
        }
        self.report.final_plan = self.plan.clone();
        self.report.decisions.sort_by_key(|d| (d.tti, d.candidate));
        Ok(self.report)
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    Simulator::new(cfg)?.run()
}

fn join_ids(ids: &[NodeId]) -> String {
    ids.iter().map(|x| x.0.to_string()).collect::<Vec<_>>().join(";")
}

/// Per-decision log: `tti,candidate,arm_members,hits,misses,reward`.
pub fn write_tti_csv<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tti", "candidate", "arm_members", "hits", "misses", "reward"])?;
    for d in &report.decisions {
        w.write_record([
            d.tti.to_string(),
            d.candidate.to_string(),
            join_ids(&d.arm),
            d.hits.to_string(),
            d.misses.to_string(),
            format!("{:.6}", d.reward),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-trial summary:
/// `trial,algo,metric,gamma,accuracy,qos_accuracy,mean_latency,mean_utility`.
pub fn write_trials_csv<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trial",
        "algo",
        "metric",
        "gamma",
        "accuracy",
        "qos_accuracy",
        "mean_latency",
        "mean_utility",
    ])?;
    for row in report.trial_rows() {
        let mut rec = vec![
            row.trial.to_string(),
            report.algo.to_string(),
            report.metric.to_string(),
            format!("{:.6}", report.gamma),
        ];
        rec.extend(row.values().iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

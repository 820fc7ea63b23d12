//! Node population and event-triggered traffic of a steel-rolling line.
//!
//! The line is a row of procedure cells, each `cell_length_m` long and
//! `line_width_m` wide. One steel plate at a time travels the line, spending
//! `plate_dwell_ttis` in every cell. Temperature, humidity and pressure
//! sensors are scattered inside the cells, vibration sensors are spaced evenly
//! along the line, and interference sensors are scattered over the whole area
//! and fire independently of the plate.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;

use crate::error::{config_err, Error, Result};
use crate::rng::{self, SimRng};

/// Transmission time interval index. One TTI is 1 ms.
pub type Tti = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SensingType {
    Temperature,
    Humidity,
    Pressure,
    Vibration,
    Interference,
}

impl SensingType {
    pub const ALL: [SensingType; 5] = [
        SensingType::Temperature,
        SensingType::Humidity,
        SensingType::Pressure,
        SensingType::Vibration,
        SensingType::Interference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SensingType::Temperature => "temperature",
            SensingType::Humidity => "humidity",
            SensingType::Pressure => "pressure",
            SensingType::Vibration => "vibration",
            SensingType::Interference => "interference",
        }
    }

    /// True for sensors whose triggering follows the plate.
    pub fn is_correlated(self) -> bool {
        self != SensingType::Interference
    }
}

impl fmt::Display for SensingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensingType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SensingType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Data(format!("unknown sensing type `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Position in meters.
    pub location: Point,
    pub sensing_type: SensingType,
    /// Procedure cell; `None` for interference nodes.
    pub cell: Option<usize>,
}

/// Node count per sensing type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeCounts {
    pub temperature: usize,
    pub humidity: usize,
    pub pressure: usize,
    pub vibration: usize,
    pub interference: usize,
}

impl TypeCounts {
    pub fn get(&self, t: SensingType) -> usize {
        match t {
            SensingType::Temperature => self.temperature,
            SensingType::Humidity => self.humidity,
            SensingType::Pressure => self.pressure,
            SensingType::Vibration => self.vibration,
            SensingType::Interference => self.interference,
        }
    }

    pub fn set(&mut self, t: SensingType, n: usize) {
        match t {
            SensingType::Temperature => self.temperature = n,
            SensingType::Humidity => self.humidity = n,
            SensingType::Pressure => self.pressure = n,
            SensingType::Vibration => self.vibration = n,
            SensingType::Interference => self.interference = n,
        }
    }

    pub fn total(&self) -> usize {
        SensingType::ALL.iter().map(|&t| self.get(t)).sum()
    }
}

/// Two-level factor used for interference and dynamics presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    High,
    Low,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::High => "high",
            Level::Low => "low",
        }
    }

    /// Per-traversal trigger probability of interference nodes.
    pub fn interference_prob(self) -> f64 {
        match self {
            Level::High => 0.8,
            Level::Low => 0.4,
        }
    }

    /// Trigger probability interval of plate-correlated nodes.
    pub fn dynamics_range(self) -> (f64, f64) {
        match self {
            Level::High => (0.6, 0.8),
            Level::Low => (0.2, 0.4),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(Level::High),
            "low" => Ok(Level::Low),
            _ => Err(config_err(format!("expected `high` or `low`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub counts: TypeCounts,
    /// Probability that an interference node fires at least once during one
    /// plate traversal of the line.
    pub interference_prob: f64,
    /// Interval the per-node trigger probability of correlated nodes is drawn from.
    pub dynamics_range: (f64, f64),
    pub cells: usize,
    pub plate_dwell_ttis: u32,
    /// Idle TTIs between two plates.
    pub plate_gap_ttis: u32,
    pub cell_length_m: f64,
    pub line_width_m: f64,
    /// Maximum extra TTIs between the plate reaching a sensor and the trigger.
    pub trigger_jitter_ttis: u32,
    /// Inclusive TTI interval of the conventional SR/SG/BSR access delay.
    pub conventional_delay_range: (u32, u32),
    /// Redraw correlated trigger probabilities at every epoch.
    pub resample_per_epoch: bool,
    pub seed: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig::desk()
    }
}

impl TrafficConfig {
    /// Desk-scale population: the production-line counts divided by ten.
    pub fn desk() -> Self {
        TrafficConfig {
            counts: TypeCounts {
                temperature: 12,
                humidity: 12,
                pressure: 12,
                vibration: 10,
                interference: 30,
            },
            interference_prob: Level::High.interference_prob(),
            dynamics_range: Level::High.dynamics_range(),
            cells: 4,
            plate_dwell_ttis: 40,
            plate_gap_ttis: 40,
            cell_length_m: 1.0,
            line_width_m: 0.5,
            trigger_jitter_ttis: 2,
            conventional_delay_range: (10, 25),
            resample_per_epoch: false,
            seed: 0,
        }
    }

    /// Full-scale population of the steel-rolling line (760 nodes).
    pub fn full_scale() -> Self {
        TrafficConfig {
            counts: TypeCounts {
                temperature: 120,
                humidity: 120,
                pressure: 120,
                vibration: 100,
                interference: 300,
            },
            cells: 40,
            ..TrafficConfig::desk()
        }
    }

    pub fn with_interference(mut self, level: Level) -> Self {
        self.interference_prob = level.interference_prob();
        self
    }

    pub fn with_dynamics(mut self, level: Level) -> Self {
        self.dynamics_range = level.dynamics_range();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn line_length_m(&self) -> f64 {
        self.cells as f64 * self.cell_length_m
    }

    /// TTIs from one plate entering the line to the next.
    pub fn trial_ttis(&self) -> Tti {
        self.cells as Tti * self.plate_dwell_ttis as Tti + self.plate_gap_ttis as Tti
    }

    /// Per-TTI Bernoulli rate of an interference node, chosen so that it
    /// fires at least once during a plate traversal with probability
    /// `interference_prob`.
    pub fn interference_rate(&self) -> f64 {
        let ttis = self.trial_ttis();
        if ttis == 0 {
            return 0.0;
        }
        1.0 - (1.0 - self.interference_prob).powf(1.0 / ttis as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 {
            return Err(config_err("the line needs at least one cell"));
        }
        if self.counts.total() == 0 {
            return Err(config_err("node population is empty"));
        }
        if !(0.0..=1.0).contains(&self.interference_prob) {
            return Err(config_err(format!(
                "interference probability {} outside [0,1]",
                self.interference_prob
            )));
        }
        let (lo, hi) = self.dynamics_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(config_err(format!(
                "dynamics range [{lo},{hi}] is not a sub-interval of [0,1]"
            )));
        }
        if self.plate_dwell_ttis == 0 {
            return Err(config_err("plate dwell must be at least one TTI"));
        }
        if !(self.cell_length_m > 0.0 && self.line_width_m > 0.0) {
            return Err(config_err("cell dimensions must be positive"));
        }
        let (dlo, dhi) = self.conventional_delay_range;
        if dlo > dhi {
            return Err(config_err(format!(
                "conventional delay range [{dlo},{dhi}] is empty"
            )));
        }
        Ok(())
    }
}

/// Builds the node population. Ids are dense in `1..=N`, assigned type by
/// type in the order temperature, humidity, pressure, vibration, interference.
pub fn build_topology(cfg: &TrafficConfig) -> Result<Vec<Node>> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, rng::STREAM_TOPOLOGY);
    let mut nodes = Vec::with_capacity(cfg.counts.total());
    let mut next_id = 1u32;
    let mut push = |nodes: &mut Vec<Node>, location, sensing_type, cell| {
        nodes.push(Node {
            id: NodeId(next_id),
            location,
            sensing_type,
            cell,
        });
        next_id += 1;
    };

    for t in [
        SensingType::Temperature,
        SensingType::Humidity,
        SensingType::Pressure,
    ] {
        for i in 0..cfg.counts.get(t) {
            let cell = i % cfg.cells;
            let x = (cell as f64 + rng.gen::<f64>()) * cfg.cell_length_m;
            let y = rng.gen::<f64>() * cfg.line_width_m;
            push(&mut nodes, Point::new(x, y), t, Some(cell));
        }
    }

    let n_vib = cfg.counts.vibration;
    let length = cfg.line_length_m();
    for i in 0..n_vib {
        let x = (i as f64 + 0.5) / n_vib as f64 * length;
        let cell = ((x / cfg.cell_length_m) as usize).min(cfg.cells - 1);
        push(
            &mut nodes,
            Point::new(x, cfg.line_width_m / 2.0),
            SensingType::Vibration,
            Some(cell),
        );
    }

    for _ in 0..cfg.counts.interference {
        let x = rng.gen::<f64>() * length;
        let y = rng.gen::<f64>() * cfg.line_width_m;
        push(&mut nodes, Point::new(x, y), SensingType::Interference, None);
    }
    Ok(nodes)
}

/// Index of `id` in a dense topology.
#[inline]
pub fn node_index(id: NodeId) -> usize {
    id.0 as usize - 1
}

/// The `k` nodes closest to `of`, excluding `of`. Ties go to the lower id.
pub fn nearest_nodes(nodes: &[Node], of: NodeId, k: usize) -> Vec<NodeId> {
    let origin = nodes[node_index(of)].location;
    let mut others: Vec<(f64, NodeId)> = nodes
        .iter()
        .filter(|n| n.id != of)
        .map(|n| (n.location.distance(&origin), n.id))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().take(k).map(|(_, id)| id).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriggerEvent {
    pub node: NodeId,
    /// Plate traversal this event belongs to.
    pub trial: u32,
    pub tti: Tti,
    /// Keys the utility of the packet.
    pub deadline_type: SensingType,
}

/// Per-node trigger probabilities for one run (or one epoch when
/// `resample_per_epoch` is set). Interference nodes carry their per-TTI rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficProfile {
    probs: Vec<f64>,
}

impl TrafficProfile {
    pub fn sample(nodes: &[Node], cfg: &TrafficConfig, rng: &mut SimRng) -> Self {
        let (lo, hi) = cfg.dynamics_range;
        let rate = cfg.interference_rate();
        let probs = nodes
            .iter()
            .map(|n| {
                if n.sensing_type.is_correlated() {
                    if hi > lo {
                        rng.gen_range(lo..=hi)
                    } else {
                        lo
                    }
                } else {
                    rate
                }
            })
            .collect();
        TrafficProfile { probs }
    }

    /// Per-plate trigger probability of a correlated node, or per-TTI rate of
    /// an interference node.
    pub fn prob(&self, id: NodeId) -> f64 {
        self.probs[node_index(id)]
    }
}

/// Streams trigger events one plate traversal at a time.
#[derive(Debug, Clone)]
pub struct TrafficGenerator {
    nodes: Vec<Node>,
    cfg: TrafficConfig,
    profile: TrafficProfile,
    profile_rng: SimRng,
    rng: SimRng,
}

impl TrafficGenerator {
    pub fn new(nodes: &[Node], cfg: &TrafficConfig) -> Result<Self> {
        cfg.validate()?;
        let mut profile_rng = rng::stream(cfg.seed, rng::STREAM_PROFILE);
        let profile = TrafficProfile::sample(nodes, cfg, &mut profile_rng);
        Ok(TrafficGenerator {
            nodes: nodes.to_vec(),
            cfg: cfg.clone(),
            profile,
            profile_rng,
            rng: rng::stream(cfg.seed, rng::STREAM_TRIGGERS),
        })
    }

    pub fn profile(&self) -> &TrafficProfile {
        &self.profile
    }

    /// Redraws correlated trigger probabilities if the config asks for it.
    pub fn start_epoch(&mut self) {
        if self.cfg.resample_per_epoch {
            self.profile = TrafficProfile::sample(&self.nodes, &self.cfg, &mut self.profile_rng);
        }
    }

    /// Events of plate traversal `trial`, which starts at `trial * trial_ttis`.
    /// Sorted by TTI, then node id.
    pub fn trial(&mut self, trial: u32) -> Vec<TriggerEvent> {
        let cfg = &self.cfg;
        let start = trial as Tti * cfg.trial_ttis();
        let dwell = cfg.plate_dwell_ttis as Tti;
        let mut events = Vec::new();

        for node in &self.nodes {
            let Some(cell) = node.cell else { continue };
            if !node.sensing_type.is_correlated() {
                continue;
            }
            if !self.rng.gen_bool(self.profile.prob(node.id)) {
                continue;
            }
            // Vibration sensors fire as the plate passes them; the others as
            // it enters their cell.
            let frac = if node.sensing_type == SensingType::Vibration {
                (node.location.x / cfg.cell_length_m - cell as f64).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let jitter = self.rng.gen_range(0..=cfg.trigger_jitter_ttis) as Tti;
            let offset = ((frac * dwell as f64) as Tti + jitter).min(dwell - 1);
            events.push(TriggerEvent {
                node: node.id,
                trial,
                tti: start + cell as Tti * dwell + offset,
                deadline_type: node.sensing_type,
            });
        }

        let rate = cfg.interference_rate();
        for node in self.nodes.iter().filter(|n| !n.sensing_type.is_correlated()) {
            for t in 0..cfg.trial_ttis() {
                if self.rng.gen_bool(rate) {
                    events.push(TriggerEvent {
                        node: node.id,
                        trial,
                        tti: start + t,
                        deadline_type: node.sensing_type,
                    });
                }
            }
        }
        events.sort_by_key(|e| (e.tti, e.node));
        events
    }
}

/// All trigger events of `n_trials` consecutive plate traversals.
pub fn generate_triggers(
    nodes: &[Node],
    cfg: &TrafficConfig,
    n_trials: u32,
) -> Result<Vec<TriggerEvent>> {
    if n_trials == 0 {
        return Err(config_err("at least one trial is required"));
    }
    let mut gen = TrafficGenerator::new(nodes, cfg)?;
    let mut events = Vec::new();
    for trial in 0..n_trials {
        events.extend(gen.trial(trial));
    }
    Ok(events)
}

/// Uniform conventional access delay in TTIs, inclusive on both ends.
pub fn conventional_access_delay(range: (u32, u32), rng: &mut impl Rng) -> u32 {
    rng.gen_range(range.0..=range.1)
}

pub fn write_topology_csv<W: Write>(nodes: &[Node], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "type", "x", "y", "cell"])?;
    for n in nodes {
        w.write_record([
            n.id.to_string(),
            n.sensing_type.to_string(),
            format!("{:.6}", n.location.x),
            format!("{:.6}", n.location.y),
            n.cell.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_triggers_csv<W: Write>(events: &[TriggerEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "tti", "node_id"])?;
    for e in events {
        w.write_record([e.trial.to_string(), e.tti.to_string(), e.node.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

//! Reservation candidates and static reservation sets.
//!
//! A label `y` becomes a reservation candidate when its best-correlated
//! feature node scores at least `alpha`. Its static reservation set holds the
//! `xi` highest-scoring feature nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::correlation::{self, BayesModel, CorrelationMetric};
use crate::error::{config_err, Result};
use crate::samples::AccessSample;
use crate::topology::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticConfig {
    /// Admission threshold per metric.
    pub thresholds: BTreeMap<CorrelationMetric, f64>,
    /// Size of each static reservation set.
    pub set_size: usize,
}

impl Default for StaticConfig {
    fn default() -> Self {
        let thresholds = BTreeMap::from([
            (CorrelationMetric::ChiSquare, 20.0),
            (CorrelationMetric::Posterior, 0.05),
            (CorrelationMetric::MutualInformation, 0.0006),
        ]);
        StaticConfig {
            thresholds,
            set_size: 8,
        }
    }
}

impl StaticConfig {
    pub fn threshold(&self, metric: CorrelationMetric) -> Result<f64> {
        self.thresholds
            .get(&metric)
            .copied()
            .ok_or_else(|| config_err(format!("no threshold configured for metric {metric}")))
    }

    pub fn with_threshold(mut self, metric: CorrelationMetric, alpha: f64) -> Self {
        self.thresholds.insert(metric, alpha);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.set_size == 0 {
            return Err(config_err("reservation set size xi must be at least 1"));
        }
        if let Some((m, a)) = self.thresholds.iter().find(|(_, a)| !(**a >= 0.0)) {
            return Err(config_err(format!("threshold for {m} must be >= 0, got {a}")));
        }
        Ok(())
    }
}

/// One entry of a static reservation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub node: NodeId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticPlan {
    pub metric: CorrelationMetric,
    pub alpha: f64,
    pub xi: usize,
    pub candidates: BTreeSet<NodeId>,
    /// Candidate -> reservation set, descending score, ties by ascending id.
    pub reservation_sets: BTreeMap<NodeId, Vec<Scored>>,
    /// Best feature score of every label seen in the corpus, admitted or not.
    pub label_max_scores: BTreeMap<NodeId, f64>,
}

impl StaticPlan {
    pub fn empty(metric: CorrelationMetric, alpha: f64, xi: usize) -> Self {
        StaticPlan {
            metric,
            alpha,
            xi,
            candidates: BTreeSet::new(),
            reservation_sets: BTreeMap::new(),
            label_max_scores: BTreeMap::new(),
        }
    }

    pub fn is_candidate(&self, y: NodeId) -> bool {
        self.candidates.contains(&y)
    }

    pub fn reservation_set(&self, y: NodeId) -> &[Scored] {
        self.reservation_sets.get(&y).map_or(&[], |v| v.as_slice())
    }

    /// Members of `R(y)` in ascending id order.
    pub fn members(&self, y: NodeId) -> Vec<NodeId> {
        let mut m: Vec<NodeId> = self.reservation_set(y).iter().map(|s| s.node).collect();
        m.sort_unstable();
        m
    }

    /// Sum of scores over `R(y)`.
    pub fn score_sum(&self, y: NodeId) -> f64 {
        self.reservation_set(y).iter().map(|s| s.score).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["candidate", "rank", "node", "score", "metric", "alpha", "xi"])?;
        for (y, set) in &self.reservation_sets {
            for (rank, s) in set.iter().enumerate() {
                w.write_record([
                    y.to_string(),
                    (rank + 1).to_string(),
                    s.node.to_string(),
                    format!("{:.9e}", s.score),
                    self.metric.to_string(),
                    self.alpha.to_string(),
                    self.xi.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Sorts scores descending with ascending-id tie-break.
pub(crate) fn rank(scored: &mut [Scored]) {
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.node.cmp(&b.node)));
}

/// Scores every feature node observed with each label and applies the
/// threshold strategy.
pub fn build_plan(
    model: &BayesModel,
    corpus: &[AccessSample],
    metric: CorrelationMetric,
    cfg: &StaticConfig,
) -> Result<StaticPlan> {
    cfg.validate()?;
    let alpha = cfg.threshold(metric)?;
    let mut observed: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for s in corpus {
        observed
            .entry(s.label)
            .or_default()
            .extend(s.features.iter().copied());
    }

    let mut plan = StaticPlan::empty(metric, alpha, cfg.set_size);
    for (y, features) in observed {
        let mut scored = features
            .iter()
            .map(|&x| {
                correlation::score(model, metric, x, y).map(|score| Scored { node: x, score })
            })
            .collect::<Result<Vec<_>>>()?;
        if scored.is_empty() {
            continue;
        }
        rank(&mut scored);
        let best = scored[0].score;
        plan.label_max_scores.insert(y, best);
        if best >= alpha {
            scored.truncate(cfg.set_size);
            plan.candidates.insert(y);
            plan.reservation_sets.insert(y, scored);
        }
    }
    Ok(plan)
}

/// Retrains on `corpus` and rebuilds the plan.
pub fn epoch_step(
    corpus: &[AccessSample],
    vocab: &[NodeId],
    metric: CorrelationMetric,
    cfg: &StaticConfig,
) -> Result<(BayesModel, StaticPlan)> {
    let model = correlation::train(corpus, vocab)?;
    let plan = build_plan(&model, corpus, metric, cfg)?;
    Ok((model, plan))
}

/// Misclassification rates of one admission threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdError {
    pub alpha: f64,
    /// Share of interference labels that would be admitted.
    pub false_admit: f64,
    /// Share of correlated labels that would be rejected.
    pub false_reject: f64,
}

/// Error rates of each threshold in `alphas` over a population of
/// `(best feature score, is correlated)` labels.
pub fn threshold_errors(population: &[(f64, bool)], alphas: &[f64]) -> Vec<ThresholdError> {
    let share = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let n_corr = population.iter().filter(|(_, c)| *c).count();
    let n_intf = population.len() - n_corr;
    alphas
        .iter()
        .map(|&alpha| ThresholdError {
            alpha,
            false_admit: share(
                population.iter().filter(|(s, c)| !*c && *s >= alpha).count(),
                n_intf,
            ),
            false_reject: share(
                population.iter().filter(|(s, c)| *c && *s < alpha).count(),
                n_corr,
            ),
        })
        .collect()
}

/// Widest run of consecutive grid thresholds whose error rates both stay at
/// or below `tolerance`, as `(low, high)`. `errors` must be sorted by alpha.
pub fn separating_band(errors: &[ThresholdError], tolerance: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let mut start: Option<f64> = None;
    for (i, e) in errors.iter().enumerate() {
        if e.false_admit <= tolerance && e.false_reject <= tolerance {
            let lo = *start.get_or_insert(e.alpha);
            let last = errors.get(i + 1).is_none_or(|n| {
                !(n.false_admit <= tolerance && n.false_reject <= tolerance)
            });
            if last && best.is_none_or(|(a, b)| e.alpha - lo > b - a) {
                best = Some((lo, e.alpha));
            }
        } else {
            start = None;
        }
    }
    best
}

pub fn write_threshold_csv<W: Write>(
    metric: CorrelationMetric,
    errors: &[ThresholdError],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "alpha", "false_admit", "false_reject"])?;
    for e in errors {
        w.write_record([
            metric.to_string(),
            format!("{:.9e}", e.alpha),
            format!("{:.6}", e.false_admit),
            format!("{:.6}", e.false_reject),
        ])?;
    }
    w.flush()?;
    Ok(())
}

//! Multinomial-event Naive Bayes over access samples, and the correlation
//! metrics derived from it.
//!
//! `phi(p | q)` is the probability that a feature token of a sample labeled
//! `q` is node `p`, estimated with add-one smoothing over the vocabulary.
//! `phi(q)` is the unsmoothed label frequency.
//!
//! Mutual information and the chi-square statistic binarize the model into a
//! 2x2 table over `{x, not x} x {y, not y}` with joint mass
//! `P(p, q) = phi(p | q) * phi(q)` and `P(not x | y) = 1 - phi(x | y)`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::samples::AccessSample;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorrelationMetric {
    Posterior,
    MutualInformation,
    ChiSquare,
}

impl CorrelationMetric {
    pub const ALL: [CorrelationMetric; 3] = [
        CorrelationMetric::Posterior,
        CorrelationMetric::MutualInformation,
        CorrelationMetric::ChiSquare,
    ];

    /// Short label used in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationMetric::Posterior => "P",
            CorrelationMetric::MutualInformation => "MI",
            CorrelationMetric::ChiSquare => "X",
        }
    }
}

impl fmt::Display for CorrelationMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrelationMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "posterior" => Ok(CorrelationMetric::Posterior),
            "mi" | "mutual_information" | "mutual-information" => {
                Ok(CorrelationMetric::MutualInformation)
            }
            "x" | "chi2" | "chi_square" | "chi-square" => Ok(CorrelationMetric::ChiSquare),
            _ => Err(Error::Config(format!("unknown correlation metric `{s}`"))),
        }
    }
}

/// Trained model parameters. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesModel {
    vocab: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    /// Row-major `|vocab| x |vocab|`: row = label q, column = feature p.
    cond: Vec<f64>,
    prior: Vec<f64>,
    /// `P(p) = sum_q phi(p | q) phi(q)`.
    marginal: Vec<f64>,
    n_samples: usize,
}

/// 2x2 joint table `[[P(x,y), P(x,!y)], [P(!x,y), P(!x,!y)]]` with its marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contingency {
    pub joint: [[f64; 2]; 2],
    /// `[P(x), P(!x)]`
    pub feature: [f64; 2],
    /// `[P(y), P(!y)]`
    pub label: [f64; 2],
}

impl BayesModel {
    /// Builds a model from explicit parameters. Rows of `cond` must each sum
    /// to one, as must `prior`.
    pub fn from_parts(
        vocab: Vec<NodeId>,
        cond: Vec<Vec<f64>>,
        prior: Vec<f64>,
        n_samples: usize,
    ) -> Result<Self> {
        let n = vocab.len();
        if cond.len() != n || prior.len() != n || cond.iter().any(|r| r.len() != n) {
            return Err(Error::Training("parameter shapes do not match the vocabulary".into()));
        }
        let index: BTreeMap<NodeId, usize> =
            vocab.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        if index.len() != n {
            return Err(Error::Training("vocabulary has duplicate ids".into()));
        }
        let row_ok = |r: &[f64]| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if !cond.iter().all(|r| row_ok(r)) || !row_ok(&prior) {
            return Err(Error::Training("parameters are not normalized".into()));
        }
        Ok(Self::assemble(vocab, index, cond.concat(), prior, n_samples))
    }

    fn assemble(
        vocab: Vec<NodeId>,
        index: BTreeMap<NodeId, usize>,
        cond: Vec<f64>,
        prior: Vec<f64>,
        n_samples: usize,
    ) -> Self {
        let n = vocab.len();
        let mut marginal = vec![0.0; n];
        for (q, &pq) in prior.iter().enumerate() {
            if pq == 0.0 {
                continue;
            }
            for (p, m) in marginal.iter_mut().enumerate() {
                *m += cond[q * n + p] * pq;
            }
        }
        BayesModel {
            vocab,
            index,
            cond,
            prior,
            marginal,
            n_samples,
        }
    }

    pub fn vocab(&self) -> &[NodeId] {
        &self.vocab
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Same parameters, different sample count.
    pub fn with_n_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    fn idx(&self, id: NodeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownNode(id))
    }

    /// `phi(p | q)`.
    pub fn cond_prob(&self, p: NodeId, q: NodeId) -> Result<f64> {
        let (p, q) = (self.idx(p)?, self.idx(q)?);
        Ok(self.cond[q * self.vocab.len() + p])
    }

    /// `phi(q)`.
    pub fn class_prior(&self, q: NodeId) -> Result<f64> {
        Ok(self.prior[self.idx(q)?])
    }

    /// Marginal feature probability `P(p)`.
    pub fn feature_marginal(&self, p: NodeId) -> Result<f64> {
        Ok(self.marginal[self.idx(p)?])
    }

    /// Labels with positive prior, ascending.
    pub fn labels(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.vocab
            .iter()
            .zip(&self.prior)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&v, _)| v)
    }

    pub fn contingency(&self, x: NodeId, y: NodeId) -> Result<Contingency> {
        let cond = self.cond_prob(x, y)?;
        let py = self.class_prior(y)?;
        let px = self.feature_marginal(x)?;
        let xy = cond * py;
        let x_ny = (px - xy).max(0.0);
        let nx_y = (1.0 - cond) * py;
        let nx_ny = (1.0 - px - py + xy).max(0.0);
        Ok(Contingency {
            joint: [[xy, x_ny], [nx_y, nx_ny]],
            feature: [px, 1.0 - px],
            label: [py, 1.0 - py],
        })
    }

    pub fn write_csv<W: Write>(&self, cond_out: W, prior_out: W) -> Result<()> {
        let n = self.vocab.len();
        let mut w = csv::Writer::from_writer(cond_out);
        w.write_record(["q", "p", "phi_p_given_q"])?;
        for (qi, q) in self.vocab.iter().enumerate() {
            if self.prior[qi] == 0.0 {
                continue;
            }
            for (pi, p) in self.vocab.iter().enumerate() {
                w.write_record([
                    q.to_string(),
                    p.to_string(),
                    format!("{:.12e}", self.cond[qi * n + pi]),
                ])?;
            }
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(prior_out);
        w.write_record(["q", "phi_q"])?;
        for (qi, q) in self.vocab.iter().enumerate() {
            if self.prior[qi] > 0.0 {
                w.write_record([q.to_string(), format!("{:.12e}", self.prior[qi])])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Maximum-likelihood multinomial estimates with add-one smoothing.
pub fn train(corpus: &[AccessSample], vocab: &[NodeId]) -> Result<BayesModel> {
    if corpus.is_empty() {
        return Err(Error::Training("cannot train on an empty corpus".into()));
    }
    let mut vocab = vocab.to_vec();
    vocab.sort_unstable();
    vocab.dedup();
    let index: BTreeMap<NodeId, usize> =
        vocab.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = vocab.len();
    let lookup = |id: NodeId| index.get(&id).copied().ok_or(Error::UnknownNode(id));

    let mut counts = vec![0u64; n * n];
    let mut tokens = vec![0u64; n];
    let mut labels = vec![0u64; n];
    for s in corpus {
        let q = lookup(s.label)?;
        labels[q] += 1;
        for &f in &s.features {
            counts[q * n + lookup(f)?] += 1;
            tokens[q] += 1;
        }
    }

    let total = corpus.len() as f64;
    let mut cond = vec![0.0; n * n];
    for q in 0..n {
        let denom = (tokens[q] + n as u64) as f64;
        for p in 0..n {
            cond[q * n + p] = (counts[q * n + p] + 1) as f64 / denom;
        }
    }
    let prior = labels.iter().map(|&c| c as f64 / total).collect();
    Ok(BayesModel::assemble(vocab, index, cond, prior, corpus.len()))
}

/// `phi(x | y)`.
pub fn posterior(model: &BayesModel, x: NodeId, y: NodeId) -> Result<f64> {
    model.cond_prob(x, y)
}

/// Mutual information of the binarized (x, y) table, in bits.
pub fn mutual_information(model: &BayesModel, x: NodeId, y: NodeId) -> Result<f64> {
    let t = model.contingency(x, y)?;
    let mut mi = 0.0;
    for (i, row) in t.joint.iter().enumerate() {
        for (j, &pq) in row.iter().enumerate() {
            if pq > 0.0 {
                mi += pq * (pq / (t.feature[i] * t.label[j])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Chi-square statistic of the binarized (x, y) table scaled to the sample count.
pub fn chi_square(model: &BayesModel, x: NodeId, y: NodeId) -> Result<f64> {
    let t = model.contingency(x, y)?;
    let n = model.n_samples as f64;
    let mut chi = 0.0;
    for (i, row) in t.joint.iter().enumerate() {
        for (j, &pq) in row.iter().enumerate() {
            let expected = n * t.feature[i] * t.label[j];
            if expected <= 0.0 {
                return Err(Error::DegenerateModel(format!(
                    "zero expected count in the ({x}, {y}) table"
                )));
            }
            let observed = n * pq;
            chi += (observed - expected).powi(2) / expected;
        }
    }
    Ok(chi)
}

pub fn score(model: &BayesModel, metric: CorrelationMetric, x: NodeId, y: NodeId) -> Result<f64> {
    match metric {
        CorrelationMetric::Posterior => posterior(model, x, y),
        CorrelationMetric::MutualInformation => mutual_information(model, x, y),
        CorrelationMetric::ChiSquare => chi_square(model, x, y),
    }
}

//! Training samples mined from the base station's access history.
//!
//! Each successful access of a node `y` at TTI `S_y` becomes one sample
//! labeled `y`. Its features are the accesses of other nodes inside
//! `[S_y - R_t, S_y + R_t]` that share `y`'s sensing type or sit within `R_r`
//! meters of it.

use std::collections::VecDeque;
use std::io::{Read, Write};

use crate::error::{config_err, Error, Result};
use crate::topology::{node_index, Node, NodeId, Tti};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessPath {
    PreAllocated,
    Conventional,
}

impl AccessPath {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessPath::PreAllocated => "preallocated",
            AccessPath::Conventional => "conventional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessRecord {
    pub node: NodeId,
    pub access_tti: Tti,
    pub path: AccessPath,
    /// TTIs from trigger to successful access.
    pub latency: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessSample {
    pub label: NodeId,
    /// One entry per access inside the window, in access order.
    pub features: Vec<NodeId>,
    pub tti: Tti,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    /// Half-width of the feature time window, in TTIs.
    pub time_window: u32,
    /// Distance radius in meters.
    pub distance_radius: f64,
    /// Plate traversals between two retrainings.
    pub epoch_length: u32,
    /// Epochs kept in the corpus.
    pub retention_epochs: u32,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            time_window: 25,
            distance_radius: 0.5,
            epoch_length: 25,
            retention_epochs: 4,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.time_window == 0 {
            return Err(config_err("sample time window must be positive"));
        }
        if !(self.distance_radius > 0.0) {
            return Err(config_err("sample distance radius must be positive"));
        }
        if self.epoch_length == 0 || self.retention_epochs == 0 {
            return Err(config_err("epoch length and retention must be at least 1"));
        }
        Ok(())
    }
}

fn lookup(nodes: &[Node], id: NodeId) -> Result<&Node> {
    if id.0 == 0 {
        return Err(Error::Data(format!("record references unknown node {id}")));
    }
    nodes
        .get(node_index(id))
        .filter(|n| n.id == id)
        .ok_or_else(|| Error::Data(format!("record references unknown node {id}")))
}

/// One sample per record. `records` must be sorted by access TTI.
pub fn extract_samples(
    records: &[AccessRecord],
    nodes: &[Node],
    cfg: &SampleConfig,
) -> Result<Vec<AccessSample>> {
    if records.windows(2).any(|w| w[0].access_tti > w[1].access_tti) {
        return Err(Error::Data("access records are not sorted by TTI".into()));
    }
    for r in records {
        lookup(nodes, r.node)?;
    }
    let rt = cfg.time_window as Tti;
    let mut samples = Vec::with_capacity(records.len());
    for rec in records {
        let label = &nodes[node_index(rec.node)];
        let lo_tti = rec.access_tti.saturating_sub(rt);
        let hi_tti = rec.access_tti + rt;
        let start = records.partition_point(|r| r.access_tti < lo_tti);
        let features = records[start..]
            .iter()
            .take_while(|r| r.access_tti <= hi_tti)
            .filter(|r| r.node != rec.node)
            .filter(|r| {
                let x = &nodes[node_index(r.node)];
                x.sensing_type == label.sensing_type
                    || x.location.distance(&label.location) <= cfg.distance_radius
            })
            .map(|r| r.node)
            .collect();
        samples.push(AccessSample {
            label: rec.node,
            features,
            tti: rec.access_tti,
        });
    }
    Ok(samples)
}

/// Rolling training corpus tagged by epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    entries: VecDeque<(u32, AccessSample)>,
}

impl Corpus {
    pub fn new() -> Self {
        Corpus::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &AccessSample> + '_ {
        self.entries.iter().map(|(_, s)| s)
    }

    pub fn to_vec(&self) -> Vec<AccessSample> {
        self.samples().cloned().collect()
    }

    pub fn epochs(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|(e, _)| *e)
    }
}

/// Appends `new_samples` under `epoch`, keeps the corpus in (epoch, TTI)
/// order, and drops epochs older than the retention horizon.
pub fn update_corpus(
    mut corpus: Corpus,
    epoch: u32,
    new_samples: Vec<AccessSample>,
    cfg: &SampleConfig,
) -> Corpus {
    let in_order = corpus
        .entries
        .back()
        .is_none_or(|(e, s)| (*e, s.tti) <= (epoch, new_samples.first().map_or(0, |s| s.tti)));
    corpus
        .entries
        .extend(new_samples.into_iter().map(|s| (epoch, s)));
    if !in_order {
        corpus
            .entries
            .make_contiguous()
            .sort_by_key(|(e, s)| (*e, s.tti));
    }
    if let Some(newest) = corpus.entries.iter().map(|(e, _)| *e).max() {
        let keep_from = (newest + 1).saturating_sub(cfg.retention_epochs);
        corpus.entries.retain(|(e, _)| *e >= keep_from);
    }
    corpus
}

pub fn write_corpus_csv<W: Write>(samples: &[AccessSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "tti", "feature_ids"])?;
    for s in samples {
        let features = s
            .features
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([s.label.to_string(), s.tti.to_string(), features])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_corpus_csv<R: Read>(input: R) -> Result<Vec<AccessSample>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let parse_id = |s: &str| -> Result<NodeId> {
        s.trim()
            .parse::<u32>()
            .map(NodeId)
            .map_err(|_| Error::Data(format!("bad node id `{s}`")))
    };
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        if row.len() != 3 {
            return Err(Error::Data(format!("expected 3 columns, got {}", row.len())));
        }
        let label = parse_id(&row[0])?;
        let tti = row[1]
            .trim()
            .parse::<Tti>()
            .map_err(|_| Error::Data(format!("bad tti `{}`", &row[1])))?;
        let features = row[2]
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(parse_id)
            .collect::<Result<Vec<_>>>()?;
        out.push(AccessSample {
            label,
            features,
            tti,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Point, SensingType};

    fn node(id: u32, x: f64, y: f64, t: SensingType) -> Node {
        Node {
            id: NodeId(id),
            location: Point::new(x, y),
            sensing_type: t,
            cell: Some(0),
        }
    }

    fn rec(id: u32, tti: Tti) -> AccessRecord {
        AccessRecord {
            node: NodeId(id),
            access_tti: tti,
            path: AccessPath::Conventional,
            latency: 12,
        }
    }

    fn cfg(rt: u32, rr: f64) -> SampleConfig {
        SampleConfig {
            time_window: rt,
            distance_radius: rr,
            ..SampleConfig::default()
        }
    }

    #[test]
    fn closed_window_and_radius_boundaries() {
        let rr = 0.5;
        let nodes = vec![
            node(1, 0.0, 0.0, SensingType::Temperature),
            node(2, 3.0, 0.0, SensingType::Temperature),
            node(3, 0.5, 0.0, SensingType::Pressure),
            node(4, 0.5 + 1e-6, 0.0, SensingType::Humidity),
        ];
        let records = vec![rec(3, 0), rec(1, 10), rec(4, 12), rec(2, 20)];
        let samples = extract_samples(&records, &nodes, &cfg(10, rr)).unwrap();
        let y = samples.iter().find(|s| s.label == NodeId(1)).unwrap();
        assert_eq!(y.features, vec![NodeId(3), NodeId(2)]);
    }

    #[test]
    fn hand_built_trace() {
        // 1 and 2 share a type; 3 is a different type 0.4 m from 1 and 2.1 m from 2.
        let nodes = vec![
            node(1, 0.0, 0.0, SensingType::Vibration),
            node(2, 2.5, 0.0, SensingType::Vibration),
            node(3, 0.4, 0.0, SensingType::Pressure),
        ];
        let records = vec![rec(1, 0), rec(3, 1), rec(2, 2), rec(1, 3), rec(3, 4)];
        let samples = extract_samples(&records, &nodes, &cfg(2, 0.5)).unwrap();
        let expect = vec![
            (1, vec![3, 2], 0),
            (3, vec![1, 1], 1),
            (2, vec![1, 1], 2),
            (1, vec![3, 2, 3], 3),
            (3, vec![1], 4),
        ];
        assert_eq!(samples.len(), expect.len());
        for (s, (label, feats, tti)) in samples.iter().zip(expect) {
            assert_eq!(s.label, NodeId(label));
            assert_eq!(s.tti, tti);
            assert_eq!(
                s.features,
                feats.into_iter().map(NodeId).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn membership_is_not_symmetric() {
        let nodes = vec![
            node(1, 0.0, 0.0, SensingType::Vibration),
            node(2, 9.0, 0.0, SensingType::Vibration),
        ];
        // 2 sees 1 twice; 1 at tti 0 cannot see 2 at tti 6.
        let records = vec![rec(1, 0), rec(1, 3), rec(2, 6)];
        let samples = extract_samples(&records, &nodes, &cfg(3, 0.5)).unwrap();
        assert_eq!(samples[0].features, vec![]);
        assert_eq!(samples[2].features, vec![NodeId(1)]);
    }

    #[test]
    fn unknown_node_is_a_data_error() {
        let nodes = vec![node(1, 0.0, 0.0, SensingType::Vibration)];
        let err = extract_samples(&[rec(7, 0)], &nodes, &cfg(3, 0.5)).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn unsorted_records_rejected() {
        let nodes = vec![node(1, 0.0, 0.0, SensingType::Vibration)];
        assert!(extract_samples(&[rec(1, 5), rec(1, 2)], &nodes, &cfg(3, 0.5)).is_err());
    }

    fn sample(label: u32, tti: Tti) -> AccessSample {
        AccessSample {
            label: NodeId(label),
            features: vec![],
            tti,
        }
    }

    #[test]
    fn corpus_append_and_evict() {
        let c = SampleConfig {
            retention_epochs: 1,
            ..SampleConfig::default()
        };
        let corpus = update_corpus(Corpus::new(), 0, vec![sample(1, 0), sample(2, 1)], &c);
        assert_eq!(corpus.len(), 2);
        let corpus = update_corpus(corpus, 1, vec![sample(3, 10)], &c);
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.to_vec()[0].label, NodeId(3));
    }

    #[test]
    fn corpus_stays_chronological() {
        let c = SampleConfig::default();
        let corpus = update_corpus(Corpus::new(), 2, vec![sample(1, 20)], &c);
        let corpus = update_corpus(corpus, 1, vec![sample(2, 10)], &c);
        let corpus = update_corpus(corpus, 3, vec![sample(3, 30)], &c);
        assert_eq!(corpus.epochs().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn corpus_csv_roundtrip() {
        let samples = vec![
            AccessSample {
                label: NodeId(4),
                features: vec![NodeId(1), NodeId(1), NodeId(9)],
                tti: 17,
            },
            sample(2, 30),
        ];
        let mut buf = Vec::new();
        write_corpus_csv(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("label,tti,feature_ids\n4,17,1;1;9\n"));
        assert_eq!(read_corpus_csv(buf.as_slice()).unwrap(), samples);
    }
}

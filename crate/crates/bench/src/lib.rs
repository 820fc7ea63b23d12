//! Fixtures shared by the benchmarks.

use dpre::simulator::Service;
use dpre::{extract_samples, AccessRecord, AccessSample, Algo, Node, RunConfig, SampleConfig, Simulator};

/// Node population and training corpus of a conventional-only desk run.
pub fn desk_corpus(trials: u32) -> (Vec<Node>, Vec<AccessSample>) {
    let cfg = RunConfig {
        n_res: 0,
        algo: Algo::APre,
        n_trials: trials,
        bootstrap_trials: 1,
        ..RunConfig::default()
    };
    let sim = Simulator::new(&cfg).expect("desk config is valid");
    let nodes = sim.nodes().to_vec();
    let report = sim.run().expect("desk run succeeds");
    let mut records: Vec<AccessRecord> = report.services.iter().map(record).collect();
    records.sort_by_key(|r| r.access_tti);
    let samples = extract_samples(&records, &nodes, &SampleConfig::default())
        .expect("records come from the same topology");
    (nodes, samples)
}

fn record(s: &Service) -> AccessRecord {
    AccessRecord {
        node: s.node,
        access_tti: s.access_tti,
        path: s.path,
        latency: s.latency,
    }
}

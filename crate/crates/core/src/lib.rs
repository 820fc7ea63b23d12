//! Predictive uplink pre-allocation for correlated sensor traffic.
//!
//! A static stage learns which nodes tend to access shortly after which, and
//! a dynamic stage decides, TTI by TTI, which of those nodes receive one of
//! the reserved RBs.

pub mod config;
pub mod correlation;
pub mod dynamic;
pub mod error;
pub mod experiment;
pub mod rng;
pub mod samples;
pub mod simulator;
pub mod static_stage;
pub mod topology;

pub use correlation::{train, BayesModel, CorrelationMetric};
pub use config::{validate_config, RawConfig};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentSpec, Manifest};
pub use samples::{extract_samples, AccessPath, AccessRecord, AccessSample, Corpus, SampleConfig};
pub use static_stage::{build_plan, epoch_step, StaticConfig, StaticPlan};
pub use topology::{build_topology, Node, NodeId, SensingType, TrafficConfig, Tti};
pub use simulator::{run, Algo, RunConfig, RunReport, Simulator};

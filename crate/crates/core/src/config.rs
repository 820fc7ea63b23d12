//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! ```text
//! # desk-scale DPre run
//! [run]
//! algo = DPre
//! gamma = 0.6
//!
//! [traffic]
//! preset = desk
//! dynamics = low
//! ```
//!
//! Keys are unique across sections, so a bare key also names a sweep
//! parameter. Keys are applied in a fixed order regardless of where they
//! appear: presets and level shorthands first, then explicit values, then
//! `alpha`, which sets the threshold of whichever metric is selected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::correlation::CorrelationMetric;
use crate::error::{config_err, Result};
use crate::simulator::{Algo, RunConfig};
use crate::topology::{Level, TrafficConfig};

/// Parsed but unvalidated configuration text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<(String, String), String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut section = String::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(format!("line {}: expected `key = value`", i + 1)));
            };
            if section.is_empty() {
                return Err(config_err(format!("line {}: key outside any section", i + 1)));
            }
            let key = (section.clone(), key.trim().to_string());
            if raw.entries.contains_key(&key) {
                return Err(config_err(format!("line {}: duplicate key `{}`", i + 1, key.1)));
            }
            raw.entries.insert(key, value.trim().to_string());
        }
        Ok(raw)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
    }

    /// Sets or replaces a value, as command-line overrides do.
    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.entries
            .insert((section.to_string(), key.to_string()), value.into());
    }

    /// Entries of one section, in key order.
    pub fn section<'a>(&'a self, name: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.entries
            .iter()
            .filter(move |((s, _), _)| s == name)
            .map(|((_, k), v)| (k.as_str(), v.as_str()))
    }

    /// Distinct section names, in name order.
    pub fn sections(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.entries.keys().map(|(s, _)| s.as_str()).collect();
        names.dedup();
        names
    }

    /// Keys of rendered run parameters the text leaves at their defaults.
    pub fn defaulted(&self) -> Vec<&'static str> {
        PARAMS
            .iter()
            .filter(|p| p.show.is_some() && self.get(p.section, p.key).is_none())
            .map(|p| p.key)
            .collect()
    }
}

type Apply = fn(&mut RunConfig, &str) -> Result<()>;
type Show = fn(&RunConfig) -> String;

struct Param {
    section: &'static str,
    key: &'static str,
    apply: Apply,
    /// `None` for shorthands that expand into other keys.
    show: Option<Show>,
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| config_err(format!("`{key}`: cannot parse `{v}`")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

macro_rules! param {
    ($section:literal, $key:literal, |$c:ident, $v:ident| $apply:expr, |$s:ident| $show:expr) => {
        Param {
            section: $section,
            key: $key,
            apply: |$c, $v| {
                $apply;
                Ok(())
            },
            show: Some(|$s| $show),
        }
    };
    ($section:literal, $key:literal, |$c:ident, $v:ident| $apply:expr) => {
        Param {
            section: $section,
            key: $key,
            apply: |$c, $v| {
                $apply;
                Ok(())
            },
            show: None,
        }
    };
}

fn set_alpha(c: &mut RunConfig, metric: CorrelationMetric, key: &str, v: &str) -> Result<()> {
    c.static_cfg.thresholds.insert(metric, num(key, v)?);
    Ok(())
}

fn show_alpha(c: &RunConfig, metric: CorrelationMetric) -> String {
    c.static_cfg
        .thresholds
        .get(&metric)
        .map_or_else(String::new, |a| a.to_string())
}

/// Every recognised key, in application order.
const PARAMS: &[Param] = &[
    param!("traffic", "preset", |c, v| {
        let seed = c.traffic.seed;
        c.traffic = match v.to_ascii_lowercase().as_str() {
            "desk" => TrafficConfig::desk(),
            "full" => TrafficConfig::full_scale(),
            _ => return Err(config_err(format!("`preset`: unknown preset `{v}`"))),
        };
        c.traffic.seed = seed;
    }),
    param!("traffic", "dynamics", |c, v| c.traffic.dynamics_range = v.parse::<Level>()?.dynamics_range()),
    param!("traffic", "interference", |c, v| c.traffic.interference_prob = v.parse::<Level>()?.interference_prob()),
    param!("run", "algo", |c, v| c.algo = v.parse::<Algo>()?, |c| c.algo.to_string()),
    param!("run", "metric", |c, v| c.metric = v.parse::<CorrelationMetric>()?, |c| c.metric.to_string()),
    param!("run", "gamma", |c, v| c.gamma = num("gamma", v)?, |c| c.gamma.to_string()),
    param!("run", "beta", |c, v| c.beta = num("beta", v)?, |c| c.beta.to_string()),
    param!("run", "n_res", |c, v| c.n_res = num("n_res", v)?, |c| c.n_res.to_string()),
    param!("run", "trials", |c, v| c.n_trials = num("trials", v)?, |c| c.n_trials.to_string()),
    param!("run", "bootstrap", |c, v| c.bootstrap_trials = num("bootstrap", v)?, |c| c.bootstrap_trials.to_string()),
    param!("run", "window", |c, v| c.reservation_window = num("window", v)?, |c| c.reservation_window.to_string()),
    param!("run", "adjacency", |c, v| c.adjacency_size = num("adjacency", v)?, |c| c.adjacency_size.to_string()),
    param!("run", "seed", |c, v| c.seed = num("seed", v)?, |c| c.seed.to_string()),
    param!("static", "xi", |c, v| c.static_cfg.set_size = num("xi", v)?, |c| c.static_cfg.set_size.to_string()),
    param!("static", "alpha_x", |c, v| set_alpha(c, CorrelationMetric::ChiSquare, "alpha_x", v)?,
        |c| show_alpha(c, CorrelationMetric::ChiSquare)),
    param!("static", "alpha_mi", |c, v| set_alpha(c, CorrelationMetric::MutualInformation, "alpha_mi", v)?,
        |c| show_alpha(c, CorrelationMetric::MutualInformation)),
    param!("static", "alpha_p", |c, v| set_alpha(c, CorrelationMetric::Posterior, "alpha_p", v)?,
        |c| show_alpha(c, CorrelationMetric::Posterior)),
    param!("static", "alpha", |c, v| set_alpha(c, c.metric, "alpha", v)?),
    param!("samples", "time_window", |c, v| c.sample_cfg.time_window = num("time_window", v)?,
        |c| c.sample_cfg.time_window.to_string()),
    param!("samples", "distance_radius", |c, v| c.sample_cfg.distance_radius = num("distance_radius", v)?,
        |c| c.sample_cfg.distance_radius.to_string()),
    param!("samples", "epoch_length", |c, v| c.sample_cfg.epoch_length = num("epoch_length", v)?,
        |c| c.sample_cfg.epoch_length.to_string()),
    param!("samples", "retention_epochs", |c, v| c.sample_cfg.retention_epochs = num("retention_epochs", v)?,
        |c| c.sample_cfg.retention_epochs.to_string()),
    param!("traffic", "n_temperature", |c, v| c.traffic.counts.temperature = num("n_temperature", v)?,
        |c| c.traffic.counts.temperature.to_string()),
    param!("traffic", "n_humidity", |c, v| c.traffic.counts.humidity = num("n_humidity", v)?,
        |c| c.traffic.counts.humidity.to_string()),
    param!("traffic", "n_pressure", |c, v| c.traffic.counts.pressure = num("n_pressure", v)?,
        |c| c.traffic.counts.pressure.to_string()),
    param!("traffic", "n_vibration", |c, v| c.traffic.counts.vibration = num("n_vibration", v)?,
        |c| c.traffic.counts.vibration.to_string()),
    param!("traffic", "n_interference", |c, v| c.traffic.counts.interference = num("n_interference", v)?,
        |c| c.traffic.counts.interference.to_string()),
    param!("traffic", "interference_prob", |c, v| c.traffic.interference_prob = num("interference_prob", v)?,
        |c| c.traffic.interference_prob.to_string()),
    param!("traffic", "dynamics_min", |c, v| c.traffic.dynamics_range.0 = num("dynamics_min", v)?,
        |c| c.traffic.dynamics_range.0.to_string()),
    param!("traffic", "dynamics_max", |c, v| c.traffic.dynamics_range.1 = num("dynamics_max", v)?,
        |c| c.traffic.dynamics_range.1.to_string()),
    param!("traffic", "cells", |c, v| c.traffic.cells = num("cells", v)?, |c| c.traffic.cells.to_string()),
    param!("traffic", "dwell", |c, v| c.traffic.plate_dwell_ttis = num("dwell", v)?,
        |c| c.traffic.plate_dwell_ttis.to_string()),
    param!("traffic", "gap", |c, v| c.traffic.plate_gap_ttis = num("gap", v)?,
        |c| c.traffic.plate_gap_ttis.to_string()),
    param!("traffic", "cell_length", |c, v| c.traffic.cell_length_m = num("cell_length", v)?,
        |c| c.traffic.cell_length_m.to_string()),
    param!("traffic", "line_width", |c, v| c.traffic.line_width_m = num("line_width", v)?,
        |c| c.traffic.line_width_m.to_string()),
    param!("traffic", "jitter", |c, v| c.traffic.trigger_jitter_ttis = num("jitter", v)?,
        |c| c.traffic.trigger_jitter_ttis.to_string()),
    param!("traffic", "delay_min", |c, v| c.traffic.conventional_delay_range.0 = num("delay_min", v)?,
        |c| c.traffic.conventional_delay_range.0.to_string()),
    param!("traffic", "delay_max", |c, v| c.traffic.conventional_delay_range.1 = num("delay_max", v)?,
        |c| c.traffic.conventional_delay_range.1.to_string()),
    param!("traffic", "resample", |c, v| c.traffic.resample_per_epoch = flag("resample", v)?,
        |c| c.traffic.resample_per_epoch.to_string()),
];

/// Sections holding run parameters.
pub const RUN_SECTIONS: [&str; 4] = ["run", "static", "samples", "traffic"];

fn find(key: &str) -> Result<(usize, &'static Param)> {
    PARAMS
        .iter()
        .enumerate()
        .find(|(_, p)| p.key == key)
        .ok_or_else(|| config_err(format!("unknown parameter `{key}`")))
}

/// Whether `key` names a run parameter.
pub fn is_param(key: &str) -> bool {
    find(key).is_ok()
}

/// Rendered value of run parameter `key` in `cfg`; `None` for shorthand
/// keys and unknown names.
pub fn param_value(cfg: &RunConfig, key: &str) -> Option<String> {
    find(key).ok().and_then(|(_, p)| p.show).map(|show| show(cfg))
}

/// Applies `(key, value)` pairs to `cfg` in the fixed parameter order.
pub fn apply_params<'a>(
    cfg: &mut RunConfig,
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<()> {
    let mut ordered = pairs
        .into_iter()
        .map(|(k, v)| find(k).map(|(i, p)| (i, p, v)))
        .collect::<Result<Vec<_>>>()?;
    ordered.sort_by_key(|(i, _, _)| *i);
    for (_, p, v) in ordered {
        (p.apply)(cfg, v)?;
    }
    Ok(())
}

/// Builds and range-checks a run configuration from the run sections of
/// `raw`. Missing keys keep their defaults. Unknown keys in a run section
/// are rejected.
pub fn validate_config(raw: &RawConfig) -> Result<RunConfig> {
    let mut pairs = Vec::new();
    for section in RUN_SECTIONS {
        for (k, v) in raw.section(section) {
            let (_, p) = find(k)?;
            if p.section != section {
                return Err(config_err(format!(
                    "`{k}` belongs in [{}], not [{section}]",
                    p.section
                )));
            }
            pairs.push((k, v));
        }
    }
    let mut cfg = RunConfig::default();
    apply_params(&mut cfg, pairs)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text of a run configuration. Parsing it back yields `cfg`.
pub fn render_run_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    for section in RUN_SECTIONS {
        let _ = writeln!(out, "[{section}]");
        for p in PARAMS.iter().filter(|p| p.section == section) {
            if let Some(show) = p.show {
                let v = show(cfg);
                if !v.is_empty() {
                    let _ = writeln!(out, "{} = {v}", p.key);
                }
            }
        }
        out.push('\n');
    }
    out
}

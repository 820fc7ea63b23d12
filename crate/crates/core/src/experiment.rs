//! Parameter sweeps with seeded replications, CSV outputs and a manifest.
//!
//! Output layout of one experiment:
//!
//! - `point-NNN.csv`: per-trial rows of every replication of grid point NNN
//! - `point-NNN-seed-S-tti.csv`: per-decision log, when `tti_log` is set
//! - `aggregate.csv`: mean and sample stdev across replications per trial
//! - `manifest.cfg`: the resolved configuration; feeding it back reproduces
//!   every CSV byte for byte
//!
//! Each CSV starts with a `# config_hash=` line naming the configuration its
//! rows came from.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{self, RawConfig, RUN_SECTIONS};
use crate::error::{config_err, Result};
use crate::simulator::{write_tti_csv, RunConfig, Simulator, TrialRow};
use crate::static_stage::{threshold_errors, ThresholdError};

pub const VERSION: &str = concat!("dpre-core ", env!("CARGO_PKG_VERSION"));

/// Hex SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Opens `path` for CSV output with the hash comment already written.
pub fn csv_file(path: &Path, hash: &str) -> Result<BufWriter<File>> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# config_hash={hash}")?;
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: RunConfig,
    /// Swept parameter and its values; the first entry varies slowest.
    /// Parsed sweeps come in key-name order.
    pub sweep: Vec<(String, Vec<String>)>,
    /// Seeds per grid point: `base.seed`, `base.seed + 1`, ...
    pub replications: u32,
    pub output_dir: PathBuf,
    pub tti_log: bool,
    /// Run parameters left at their defaults, for the manifest.
    pub defaulted: Vec<String>,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub values: Vec<(String, String)>,
    pub config: RunConfig,
}

impl SweepPoint {
    pub fn file_name(&self) -> String {
        format!("point-{:03}.csv", self.index)
    }

    pub fn config_hash(&self) -> String {
        config_hash(&config::render_run_config(&self.config))
    }
}

/// Expands `2..5` into `2, 3, 4, 5`; other items pass through.
fn expand(values: &str) -> Vec<String> {
    values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .flat_map(|v| {
            let range = v
                .split_once("..")
                .and_then(|(a, b)| Some((a.trim().parse::<i64>().ok()?, b.trim().parse::<i64>().ok()?)));
            match range {
                Some((a, b)) if a <= b => (a..=b).map(|i| i.to_string()).collect(),
                _ => vec![v.to_string()],
            }
        })
        .collect()
}

impl ExperimentSpec {
    pub fn single(base: RunConfig, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            base,
            sweep: Vec::new(),
            replications: 1,
            output_dir: output_dir.into(),
            tti_log: false,
            defaulted: Vec::new(),
        }
    }

    /// Reads the run sections and the `[experiment]` section. `out` is the
    /// output directory when the text does not name one.
    pub fn from_raw(raw: &RawConfig, out: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = raw
            .sections()
            .into_iter()
            .find(|s| *s != "experiment" && !RUN_SECTIONS.contains(s))
        {
            return Err(config_err(format!("unknown section [{s}]")));
        }
        let base = config::validate_config(raw)?;
        let mut spec = ExperimentSpec::single(base, out.unwrap_or_else(|| PathBuf::from(".")));
        spec.defaulted = raw.defaulted().into_iter().map(String::from).collect();
        for (key, value) in raw.section("experiment") {
            if let Some(param) = key.strip_prefix("sweep.") {
                if !config::is_param(param) {
                    return Err(config_err(format!("unknown sweep parameter `{param}`")));
                }
                let values = expand(value);
                if values.is_empty() {
                    return Err(config_err(format!("sweep over `{param}` has no values")));
                }
                spec.sweep.push((param.to_string(), values));
                continue;
            }
            match key {
                "replications" => {
                    spec.replications = value
                        .parse()
                        .map_err(|_| config_err(format!("`replications`: cannot parse `{value}`")))?
                }
                "out" => spec.output_dir = PathBuf::from(value),
                "tti_log" => spec.tti_log = matches!(value, "true" | "yes" | "1"),
                _ => return Err(config_err(format!("unknown experiment key `{key}`"))),
            }
        }
        spec.points()?;
        Ok(spec)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replications as u64)
            .map(|r| self.base.seed.wrapping_add(r))
            .collect()
    }

    /// The Cartesian grid, every point validated.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        if self.replications == 0 {
            return Err(config_err("replications must be at least 1"));
        }
        let mut grid: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (key, values) in &self.sweep {
            if !config::is_param(key) {
                return Err(config_err(format!("unknown sweep parameter `{key}`")));
            }
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((key.clone(), v.clone()));
                        p
                    })
                })
                .collect();
        }
        grid.into_iter()
            .enumerate()
            .map(|(index, values)| {
                let mut config = self.base.clone();
                config::apply_params(&mut config, values.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
                config.validate().map_err(|e| {
                    config_err(format!("sweep point {index} ({}): {e}", describe(&values)))
                })?;
                Ok(SweepPoint { index, values, config })
            })
            .collect()
    }

    /// Canonical configuration text; the output directory is not part of it.
    pub fn render(&self) -> String {
        let mut out = config::render_run_config(&self.base);
        let _ = writeln!(out, "[experiment]");
        let _ = writeln!(out, "replications = {}", self.replications);
        let _ = writeln!(out, "tti_log = {}", self.tti_log);
        for (key, values) in &self.sweep {
            let _ = writeln!(out, "sweep.{key} = {}", values.join(", "));
        }
        out
    }

    pub fn config_hash(&self) -> String {
        config_hash(&self.render())
    }
}

fn describe(values: &[(String, String)]) -> String {
    values
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Files written by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub points: Vec<SweepPoint>,
    pub files: Vec<PathBuf>,
    pub path: PathBuf,
}

struct RunOutput {
    rows: Vec<TrialRow>,
    tti_log: Option<Vec<u8>>,
}

/// Aggregate columns that are always present.
const FIXED_COLUMNS: [&str; 5] = ["algo", "metric", "gamma", "n_res", "xi"];

/// Runs every grid point for every seed on the rayon pool, then writes the
/// CSVs and the manifest.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Manifest> {
    let points = spec.points()?;
    let seeds = spec.seeds();
    fs::create_dir_all(&spec.output_dir)?;

    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let outputs = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let cfg = RunConfig { seed, ..points[p].config.clone() };
            let report = Simulator::new(&cfg)?.run()?;
            let tti_log = if spec.tti_log {
                let mut buf = Vec::new();
                write_tti_csv(&report, &mut buf)?;
                Some(buf)
            } else {
                None
            };
            Ok(RunOutput { rows: report.trial_rows(), tti_log })
        })
        .collect::<Result<Vec<_>>>()?;

    let dir = &spec.output_dir;
    let hash = spec.config_hash();
    let mut files = Vec::new();
    for (point, runs) in points.iter().zip(outputs.chunks(seeds.len())) {
        let point_hash = point.config_hash();
        let path = dir.join(point.file_name());
        let mut w = csv::Writer::from_writer(csv_file(&path, &point_hash)?);
        let mut header = vec!["seed", "trial", "algo", "metric", "gamma"];
        header.extend(TrialRow::FIELDS);
        w.write_record(&header)?;
        let cfg = &point.config;
        for (seed, run) in seeds.iter().zip(runs) {
            for row in &run.rows {
                let mut rec = vec![
                    seed.to_string(),
                    row.trial.to_string(),
                    cfg.algo.to_string(),
                    cfg.metric.to_string(),
                    format!("{:.6}", cfg.gamma),
                ];
                rec.extend(row.values().iter().map(|v| format!("{v:.6}")));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        files.push(path);

        for (seed, run) in seeds.iter().zip(runs) {
            if let Some(log) = &run.tti_log {
                let path = dir.join(format!("point-{:03}-seed-{seed}-tti.csv", point.index));
                let mut f = csv_file(&path, &point_hash)?;
                f.write_all(log)?;
                f.flush()?;
                files.push(path);
            }
        }
    }

    let path = dir.join("aggregate.csv");
    write_aggregate(&path, &hash, spec, &points, &outputs, seeds.len())?;
    files.push(path);

    let manifest_path = dir.join("manifest.cfg");
    let mut m = BufWriter::new(File::create(&manifest_path)?);
    writeln!(m, "# config_hash={hash}")?;
    writeln!(m, "# version={VERSION}")?;
    writeln!(
        m,
        "# seeds={}",
        seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    )?;
    if !spec.defaulted.is_empty() {
        writeln!(m, "# defaulted={}", spec.defaulted.join(","))?;
    }
    for p in &points {
        let values = describe(&p.values);
        let sep = if values.is_empty() { "" } else { " " };
        writeln!(m, "# {} config_hash={}{sep}{values}", p.file_name(), p.config_hash())?;
    }
    m.write_all(spec.render().as_bytes())?;
    m.flush()?;

    Ok(Manifest {
        config_hash: hash,
        seeds,
        points,
        files,
        path: manifest_path,
    })
}

fn write_aggregate(
    path: &Path,
    hash: &str,
    spec: &ExperimentSpec,
    points: &[SweepPoint],
    outputs: &[RunOutput],
    n_seeds: usize,
) -> Result<()> {
    let extra: Vec<&str> = spec
        .sweep
        .iter()
        .map(|(k, _)| k.as_str())
        .filter(|k| !FIXED_COLUMNS.contains(k))
        .collect();
    let mut w = csv::Writer::from_writer(csv_file(path, hash)?);
    let mut header: Vec<String> = vec!["point".into()];
    header.extend(FIXED_COLUMNS.iter().chain(&extra).map(|s| s.to_string()));
    header.extend(["trial".into(), "n".into()]);
    for f in TrialRow::FIELDS {
        header.push(format!("{f}_mean"));
        header.push(format!("{f}_sd"));
    }
    w.write_record(&header)?;

    for (point, runs) in points.iter().zip(outputs.chunks(n_seeds)) {
        let mut labels = vec![point.index.to_string()];
        for key in FIXED_COLUMNS.iter().chain(&extra) {
            let assigned = point.values.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
            labels.push(
                config::param_value(&point.config, key)
                    .or(assigned)
                    .unwrap_or_default(),
            );
        }
        let n_trials = point.config.n_trials as usize;
        for t in 0..n_trials {
            let mut rec = labels.clone();
            rec.push((t + 1).to_string());
            rec.push(runs.len().to_string());
            for f in 0..TrialRow::FIELDS.len() {
                let xs: Vec<f64> = runs.iter().map(|r| r.rows[t].values()[f]).collect();
                let (mean, sd) = mean_sd(&xs);
                rec.push(format!("{mean:.6}"));
                rec.push(format!("{sd:.6}"));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Best-feature scores of every scored label after a run, pooled over
/// `seeds`, tagged with whether the label is plate-correlated.
pub fn label_score_population(cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<(f64, bool)>> {
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let sim = Simulator::new(&RunConfig { seed, ..cfg.clone() })?;
            let correlated: Vec<bool> = sim
                .nodes()
                .iter()
                .map(|n| n.sensing_type.is_correlated())
                .collect();
            let report = sim.run()?;
            Ok(report
                .final_plan
                .label_max_scores
                .iter()
                .map(|(y, &s)| (s, correlated[y.0 as usize - 1]))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

/// Error rates on an evenly spaced grid of `steps + 1` thresholds from 0 to
/// just above the highest score.
pub fn threshold_curve(population: &[(f64, bool)], steps: usize) -> Vec<ThresholdError> {
    let top = population.iter().map(|(s, _)| *s).fold(0.0, f64::max) * 1.05;
    let steps = steps.max(1);
    let alphas: Vec<f64> = (0..=steps).map(|i| top * i as f64 / steps as f64).collect();
    threshold_errors(population, &alphas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig {
            n_trials: 3,
            bootstrap_trials: 2,
            ..RunConfig::default()
        }
    }

    #[test]
    fn ranges_expand() {
        assert_eq!(expand("2..4, 8"), ["2", "3", "4", "8"]);
        assert_eq!(expand("DPre,EXP3"), ["DPre", "EXP3"]);
    }

    #[test]
    fn grid_is_cartesian_and_ordered() {
        let raw = RawConfig::parse(
            "[experiment]\nsweep.gamma = 0.3, 0.6\nsweep.algo = DPre, EXP3\nreplications = 2",
        )
        .unwrap();
        let spec = ExperimentSpec::from_raw(&raw, None).unwrap();
        let points = spec.points().unwrap();
        assert_eq!(points.len(), 4);
        // Keys in name order, the first varying slowest.
        assert_eq!(points[1].config.algo.to_string(), "DPre");
        assert_eq!(points[1].config.gamma, 0.6);
        assert_eq!(points[2].config.algo.to_string(), "EXP3");
        assert_eq!(spec.seeds(), [0, 1]);
    }

    #[test]
    fn unknown_sweep_parameter_fails_before_running() {
        let raw = RawConfig::parse("[experiment]\nsweep.warp = 1, 2").unwrap();
        let err = ExperimentSpec::from_raw(&raw, None).unwrap_err();
        assert!(err.to_string().contains("warp"));
        let raw = RawConfig::parse("[experiment]\nsweep.gamma = 0.5, 0").unwrap();
        assert!(ExperimentSpec::from_raw(&raw, None).is_err());
        let raw = RawConfig::parse("[runn]\ngamma = 0.5").unwrap();
        assert!(ExperimentSpec::from_raw(&raw, None).is_err());
    }

    #[test]
    fn empty_sweep_is_one_run() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::single(small(), dir.path());
        let m = run_experiment(&spec).unwrap();
        assert_eq!(m.points.len(), 1);
        let text = fs::read_to_string(dir.path().join("point-000.csv")).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config_hash="));
        assert_eq!(
            lines.next(),
            Some("seed,trial,algo,metric,gamma,accuracy,qos_accuracy,mean_latency,mean_utility")
        );
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn aggregate_has_mean_and_sd() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::single(small(), dir.path());
        spec.replications = 3;
        spec.sweep = vec![("xi".into(), vec!["2".into(), "4".into()])];
        run_experiment(&spec).unwrap();
        let text = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
        let header = text.lines().nth(1).unwrap();
        assert!(header.starts_with("point,algo,metric,gamma,n_res,xi,trial,n,accuracy_mean,accuracy_sd"));
        assert_eq!(text.lines().count(), 2 + 2 * 3);
        assert!(text.lines().nth(2).unwrap().starts_with("0,DPre,X,0.3,6,2,1,3,"));
    }

    #[test]
    fn mean_sd_is_sample_deviation() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_sd(&[7.0]), (7.0, 0.0));
    }
}

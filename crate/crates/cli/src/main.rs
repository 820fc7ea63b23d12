//! `dpre`: runs simulator sweeps, the regret harness and threshold scans.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for
//! failures while running or writing output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dpre::dynamic::harness::{evaluate, write_regret_csv, HarnessConfig, Learner};
use dpre::experiment::{self, csv_file, label_score_population, threshold_curve};
use dpre::simulator::{write_trials_csv, write_tti_csv};
use dpre::static_stage::{separating_band, write_threshold_csv};
use dpre::topology::write_topology_csv;
use dpre::{run_experiment, Error, ExperimentSpec, RawConfig, Simulator};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "DPRE_OUT";

#[derive(Parser)]
#[command(name = "dpre", version, about = "Predictive uplink pre-allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration, sweeping any `sweep.*` keys, and write CSVs plus a manifest.
    Run(RunArgs),
    /// Run one configuration and dump topology, plan, decision log and trial summary.
    Inspect(RunArgs),
    /// Scan admission thresholds and report error rates of both node populations.
    Thresholds {
        #[command(flatten)]
        run: RunArgs,
        /// Number of threshold grid steps.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Error rate tolerated on either side when reporting the separating band.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
    /// Measure empirical regret against the best fixed arm.
    Regret(RegretArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (key = value with [section] headers).
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "n-res")]
    n_res: Option<usize>,
    #[arg(long)]
    xi: Option<usize>,
    /// Admission threshold of the selected metric.
    #[arg(long)]
    alpha: Option<f64>,
    /// X, MI or P.
    #[arg(long)]
    metric: Option<String>,
    /// DPre, DPre-wQoS, EXP3, APre or APre-D.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u32>,
    /// Seeds per grid point.
    #[arg(long)]
    replications: Option<u32>,
    /// Output directory [default: the config's `out`, then $DPRE_OUT, then ./results].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegretArgs {
    /// Number of arms.
    #[arg(long, default_value_t = 4)]
    arms: usize,
    /// Trials per assignment.
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Adversarial assignments, seeded 0..N.
    #[arg(long, default_value_t = 100)]
    seeds: u64,
    /// Policy runs averaged per assignment.
    #[arg(long = "policy-seeds", default_value_t = 50)]
    policy_seeds: u32,
    /// Output directory [default: $DPRE_OUT, then ./results].
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn raw(&self) -> Result<RawConfig, Error> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::parse(&fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read {}: {e}", path.display()))
            })?)?,
            None => RawConfig::default(),
        };
        let overrides = [
            ("run", "gamma", self.gamma.map(|v| v.to_string())),
            ("run", "beta", self.beta.map(|v| v.to_string())),
            ("run", "n_res", self.n_res.map(|v| v.to_string())),
            ("run", "metric", self.metric.clone()),
            ("run", "algo", self.algo.clone()),
            ("run", "seed", self.seed.map(|v| v.to_string())),
            ("run", "trials", self.trials.map(|v| v.to_string())),
            ("static", "xi", self.xi.map(|v| v.to_string())),
            ("static", "alpha", self.alpha.map(|v| v.to_string())),
            ("experiment", "replications", self.replications.map(|v| v.to_string())),
        ];
        for (section, key, value) in overrides {
            if let Some(v) = value {
                raw.set(section, key, v);
            }
        }
        if let Some(out) = &self.out {
            raw.set("experiment", "out", out.display().to_string());
        }
        Ok(raw)
    }

    fn spec(&self) -> Result<ExperimentSpec, Error> {
        ExperimentSpec::from_raw(&self.raw()?, Some(default_out()))
    }
}

fn default_out() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("results"), PathBuf::from)
}

fn create(path: &Path) -> Result<fs::File, Error> {
    Ok(fs::File::create(path)?)
}

fn cmd_run(args: &RunArgs) -> Result<(), Error> {
    let spec = args.spec()?;
    let manifest = run_experiment(&spec)?;
    println!(
        "{} points x {} seeds -> {}",
        manifest.points.len(),
        manifest.seeds.len(),
        manifest.path.display()
    );
    Ok(())
}

fn cmd_inspect(args: &RunArgs) -> Result<(), Error> {
    let spec = args.spec()?;
    if !spec.sweep.is_empty() {
        return Err(Error::Config("inspect takes a single configuration, not a sweep".into()));
    }
    let dir = &spec.output_dir;
    fs::create_dir_all(dir)?;
    let hash = spec.config_hash();
    let sim = Simulator::new(&spec.base)?;
    write_topology_csv(sim.nodes(), csv_file(&dir.join("topology.csv"), &hash)?)?;
    let report = sim.run()?;
    report
        .final_plan
        .write_csv(csv_file(&dir.join("plan.csv"), &hash)?)?;
    write_tti_csv(&report, csv_file(&dir.join("tti.csv"), &hash)?)?;
    write_trials_csv(&report, csv_file(&dir.join("trials.csv"), &hash)?)?;
    let mut m = create(&dir.join("manifest.cfg"))?;
    writeln!(m, "# config_hash={hash}")?;
    writeln!(m, "# version={}", experiment::VERSION)?;
    m.write_all(spec.render().as_bytes())?;
    let acc = report.accuracy(false);
    println!(
        "{} trials, {} triggers, mean accuracy {:.4} -> {}",
        report.n_trials,
        report.n_triggers,
        acc.iter().sum::<f64>() / acc.len().max(1) as f64,
        dir.display()
    );
    Ok(())
}

fn cmd_thresholds(args: &RunArgs, steps: usize, tolerance: f64) -> Result<(), Error> {
    let spec = args.spec()?;
    if !spec.sweep.is_empty() {
        return Err(Error::Config("thresholds takes a single configuration, not a sweep".into()));
    }
    fs::create_dir_all(&spec.output_dir)?;
    let population = label_score_population(&spec.base, &spec.seeds())?;
    let curve = threshold_curve(&population, steps);
    let path = spec.output_dir.join("thresholds.csv");
    write_threshold_csv(spec.base.metric, &curve, csv_file(&path, &spec.config_hash())?)?;
    match separating_band(&curve, tolerance) {
        Some((lo, hi)) => println!("separating band [{lo:.6}, {hi:.6}], width {:.6}", hi - lo),
        None => println!("no threshold separates the populations within {tolerance}"),
    }
    println!("-> {}", path.display());
    Ok(())
}

fn cmd_regret(args: &RegretArgs) -> Result<(), Error> {
    let cfg = HarnessConfig {
        arms: args.arms,
        horizon: args.horizon,
        gamma: args.gamma,
        beta: args.beta,
        policy_seeds: args.policy_seeds,
    };
    let mut rows = Vec::new();
    for seed in 0..args.seeds {
        rows.extend(evaluate(seed, &cfg, &[Learner::Drp, Learner::Exp3])?);
    }
    let out = args.out.clone().unwrap_or_else(default_out);
    fs::create_dir_all(&out)?;
    let text = format!(
        "[regret]\narms = {}\nhorizon = {}\ngamma = {}\nbeta = {}\nseeds = {}\npolicy_seeds = {}\n",
        args.arms, args.horizon, args.gamma, args.beta, args.seeds, args.policy_seeds
    );
    let path = out.join("regret.csv");
    write_regret_csv(&rows, csv_file(&path, &experiment::config_hash(&text))?)?;
    let drp: Vec<_> = rows.iter().filter(|r| r.learner == Learner::Drp).collect();
    let within = drp.iter().filter(|r| r.within_bound()).count();
    println!("DRP within bound on {within}/{} assignments -> {}", drp.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Inspect(args) => cmd_inspect(args),
        Command::Thresholds { run, steps, tolerance } => cmd_thresholds(run, *steps, *tolerance),
        Command::Regret(args) => cmd_regret(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("dpre: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("dpre: {e}");
            ExitCode::from(3)
        }
    }
}

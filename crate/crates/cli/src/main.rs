mod args;
mod report;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use ddol::data::generate_synthetic;
use ddol::experts::train_stumps;
use ddol::sim::{run, Algorithm, AlgorithmConfig, ExperimentSpec};
use ddol::{Dataset, DwmConfig, ExpertPool, OmdConfig, Topology, TopologyKind};
use serde::Serialize;
use serde_json::json;

use args::{known_defaults, Cli};
use report::{bound_inputs, summarize, write_csv, RunSummary};

#[derive(Serialize)]
struct Summary {
    algorithm: Algorithm,
    dataset: serde_json::Value,
    seed: u64,
    topology: String,
    partition: String,
    parallel: bool,
    config: serde_json::Value,
    runs: Vec<RunSummary>,
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

/// Flag combinations clap cannot express; these exit like any usage error.
fn check_usage(cli: &Cli) -> Option<(f64, f64)> {
    if cli.agents.is_empty() || cli.agents.contains(&0) {
        usage_error("--agents values must be >= 1");
    }
    let distinct: HashSet<_> = cli.agents.iter().collect();
    if distinct.len() != cli.agents.len() {
        usage_error("--agents values must be distinct");
    }
    if cli.rounds == Some(0) {
        usage_error("--rounds must be >= 1");
    }
    if cli.algo.is_weighted_majority() {
        if !(cli.alpha > 0.0 && cli.alpha < 1.0) {
            usage_error(format!("--alpha must lie in (0, 1), got {}", cli.alpha));
        }
        if cli.experts == 0 {
            usage_error("--experts must be >= 1");
        }
        if cli.probes < 2 {
            usage_error("--probes must be >= 2");
        }
        return None;
    }
    let defaults = cli.data.as_deref().and_then(known_defaults);
    let c = cli.c.or(defaults.map(|d| d.0));
    let s = cli.s.or(defaults.map(|d| d.1));
    let (Some(c), Some(s)) = (c, s) else {
        usage_error("--C and --S are required for mirror-descent algorithms on this dataset");
    };
    if !(c > 0.0 && s > 0.0) {
        usage_error("--C and --S must be > 0");
    }
    if let Some(a) = cli.strong_convexity {
        if !(a > 0.0) {
            usage_error("--strong-convexity must be > 0");
        }
    }
    Some((c, s))
}

fn load(cli: &Cli) -> Result<(Dataset, serde_json::Value)> {
    if let Some(path) = &cli.data {
        let d = Dataset::load_libsvm(path).with_context(|| format!("loading {}", path.display()))?;
        let info = json!({ "path": path, "examples": d.len(), "dim": d.dim });
        Ok((d, info))
    } else {
        let spec = cli.synthetic.expect("clap requires --data or --synthetic").spec(cli.seed);
        let syn = generate_synthetic(&spec)?;
        let info = json!({
            "synthetic": spec,
            "examples": syn.dataset.len(),
            "dim": syn.dataset.dim,
        });
        Ok((syn.dataset, info))
    }
}

fn execute(cli: &Cli, omd_params: Option<(f64, f64)>) -> Result<()> {
    let (dataset, dataset_info) = load(cli)?;
    let dataset = Arc::new(dataset);
    let max_agents = *cli.agents.iter().max().expect("non-empty sweep");
    let rounds = cli.rounds.unwrap_or(dataset.len() / max_agents);
    anyhow::ensure!(
        rounds > 0,
        "{} examples cannot feed {max_agents} agents for a single round",
        dataset.len()
    );

    let pool: Option<ExpertPool> = if cli.algo.is_weighted_majority() {
        Some(train_stumps(&dataset, cli.experts, cli.probes, cli.seed).context("training experts")?)
    } else {
        None
    };
    let config_info = match (&pool, omd_params) {
        (Some(pool), _) => json!({ "alpha": cli.alpha, "probes": cli.probes, "experts": pool.stumps() }),
        (None, Some((c, s))) => json!({
            "C": c,
            "S": s,
            "include_regularizer": !cli.no_regularizer_gradient,
            "strong_convexity": cli.strong_convexity,
        }),
        (None, None) => unreachable!("usage check supplies C and S"),
    };

    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let kind = TopologyKind::from(cli.topology);
    let mut runs = Vec::new();
    for &n in &cli.agents {
        let config = match (&pool, omd_params) {
            (Some(pool), _) => AlgorithmConfig::Dwm(DwmConfig {
                alpha: cli.alpha,
                n_agents: n,
                pool: pool.clone(),
                randomized: cli.algo.is_randomized(),
            }),
            (None, Some((c, s))) => {
                let mut cfg = OmdConfig::new(cli.algo.omd_variant().expect("mirror-descent algorithm"), c, s, n);
                cfg.include_regularizer = !cli.no_regularizer_gradient;
                AlgorithmConfig::Omd(cfg)
            }
            (None, None) => unreachable!(),
        };
        let mut spec = ExperimentSpec::new(
            cli.algo,
            Topology::from_kind(kind, n)?,
            rounds,
            Arc::clone(&dataset),
            config,
            cli.seed,
        );
        spec.partition = cli.partition.strategy(cli.seed);
        spec.parallel = cli.parallel;

        let start = Instant::now();
        let metrics = run(&spec).with_context(|| format!("run with {n} agents"))?;
        let elapsed = start.elapsed().as_secs_f64();

        write_csv(&cli.out.join(format!("run_N{n}.csv")), &metrics)?;
        if cli.emit_bounds {
            write_json(&cli.out.join(format!("bounds_N{n}.json")), &bound_inputs(&metrics))?;
        }
        let summary = summarize(&spec, &metrics, cli.strong_convexity, elapsed)?;
        eprintln!(
            "N={n}: {} rounds, total mistakes {}, mean per agent {:.1}",
            rounds,
            summary.total_mistakes,
            summary.total_mistakes as f64 / n as f64
        );
        runs.push(summary);
    }

    let summary = Summary {
        algorithm: cli.algo,
        dataset: dataset_info,
        seed: cli.seed,
        topology: kind.to_string(),
        partition: format!("{:?}", cli.partition).to_lowercase(),
        parallel: cli.parallel,
        config: config_info,
        runs,
    };
    write_json(&cli.out.join("summary.json"), &summary)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let omd_params = check_usage(&cli);
    match execute(&cli, omd_params) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

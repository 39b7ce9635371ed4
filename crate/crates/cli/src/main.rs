use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dlrcs::harness::{
    apply_config_text, draw_trial_graph, draw_trial_problem, emit_report, preset, replot_directory,
    run_experiment, ExperimentReport, Metric, RunConfig, PRESET_NAMES,
};
use dlrcs::problem::write_instance;

#[derive(Parser)]
#[command(
    name = "dlrcs",
    version,
    about = "Decentralized low-rank compressive sensing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one trial's instance, sketches and graph to files.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Trial index; the trial seed is base_seed + trial.
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long, default_value = "out/generate")]
        out_dir: PathBuf,
    },
    /// Run a configuration without sweeps.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Defaults to out/<name>.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run a preset or a configuration with sweep lists.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Defaults to out/<name>.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Re-render plot.svg from the aggregate CSVs in a report directory.
    Plot {
        dir: PathBuf,
        /// sd_u or rel_fro.
        #[arg(long, default_value = "sd_u")]
        metric: String,
        #[arg(long, default_value = "")]
        title: String,
    },
}

/// Configuration sources, applied in order: defaults or preset, config file,
/// then individual flags.
#[derive(Args)]
struct ConfigArgs {
    /// Start from a named preset.
    #[arg(long)]
    preset: Option<String>,
    /// Config file in `key = value` form.
    #[arg(long)]
    config: Option<PathBuf>,
    /// base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, using config file keys.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    edge_probability: Option<f64>,
    /// Consensus rounds per aggregation (C).
    #[arg(long, short = 'C')]
    consensus_rounds: Option<usize>,
    /// Power-method iterations (B).
    #[arg(long, short = 'B')]
    pm_iters: Option<usize>,
    /// Outer-iteration cap (T).
    #[arg(long, short = 'T')]
    max_iters: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// defgd, centralized or both.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_delimiter = ',')]
    sweep_q: Option<Vec<usize>>,
    #[arg(long = "sweep-C", value_delimiter = ',')]
    sweep_consensus_rounds: Option<Vec<usize>>,
    #[arg(long = "sweep-prob", value_delimiter = ',')]
    sweep_edge_probability: Option<Vec<f64>>,
    /// descent or literal.
    #[arg(long)]
    gradient_sign: Option<String>,
    /// average, sum or per_measurement.
    #[arg(long)]
    gradient_scale: Option<String>,
    /// eigenvalue or singular_value.
    #[arg(long)]
    lambda: Option<String>,
    /// common or per_node.
    #[arg(long)]
    basis_sync: Option<String>,
    #[arg(long)]
    b_std: Option<f64>,
    /// erdos_renyi or split.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    require_connected: bool,
    /// sd_u or rel_fro.
    #[arg(long)]
    metric: Option<String>,
}

fn opt<T: ToString>(x: &Option<T>) -> Option<String> {
    x.as_ref().map(ToString::to_string)
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.push((k.to_string(), v));
            }
        };
        put("name", self.name.clone());
        put("base_seed", opt(&self.seed));
        put("n", opt(&self.n));
        put("q", opt(&self.q));
        put("r", opt(&self.r));
        put("m", opt(&self.m));
        put("p", opt(&self.p));
        put("edge_probability", opt(&self.edge_probability));
        put("consensus_rounds", opt(&self.consensus_rounds));
        put("pm_iters", opt(&self.pm_iters));
        put("max_iters", opt(&self.max_iters));
        put("gamma", opt(&self.gamma));
        put("trials", opt(&self.trials));
        put("mode", self.mode.clone());
        put("sweep_q", self.sweep_q.as_deref().map(list));
        put(
            "sweep_consensus_rounds",
            self.sweep_consensus_rounds.as_deref().map(list),
        );
        put(
            "sweep_edge_probability",
            self.sweep_edge_probability.as_deref().map(list),
        );
        put("gradient_sign", self.gradient_sign.clone());
        put("gradient_scale", self.gradient_scale.clone());
        put("lambda", self.lambda.clone());
        put("basis_sync", self.basis_sync.clone());
        put("b_std", opt(&self.b_std));
        put("graph", self.graph.clone());
        put(
            "require_connected",
            self.require_connected.then(|| "true".to_string()),
        );
        put("metric", self.metric.clone());
        kv
    }

    fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = match &self.preset {
            Some(name) => preset(name).map_err(|e| e.to_string())?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            cfg = apply_config_text(cfg, &text).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        let mut pairs = self.overrides();
        for raw in &self.set {
            let (k, v) = raw
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{raw}`"))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        for (k, v) in pairs {
            cfg =
                apply_config_text(cfg, &format!("{k} = {v}")).map_err(|e| format!("--{k}: {e}"))?;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn default_out(cfg: &RunConfig, out_dir: Option<PathBuf>) -> PathBuf {
    out_dir.unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

fn summarize(report: &ExperimentReport) {
    println!(
        "{:<32} {:>7} {:>6} {:>12} {:>12}",
        "setting", "trials", "iters", "mean sd_u", "mean rel_fro"
    );
    for s in &report.settings {
        match s.aggregate.last() {
            Some(last) => println!(
                "{:<32} {:>7} {:>6} {:>12.3e} {:>12.3e}",
                s.setting.label,
                s.traces.len(),
                last.iter,
                last.mean_sd_u,
                last.mean_rel_fro
            ),
            None => println!("{:<32} {:>7}", s.setting.label, 0),
        }
    }
    for f in &report.failures {
        eprintln!("trial {} of `{}` failed: {}", f.trial, f.setting, f.message);
    }
}

fn execute(cfg: RunConfig, out_dir: PathBuf) -> Result<(), String> {
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    summarize(&report);
    emit_report(&report, &out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    println!("report written to {}", out_dir.display());
    Ok(())
}

fn generate(cfg: RunConfig, trial: usize, out_dir: &Path) -> Result<(), String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    for q in cfg.q_values() {
        let (inst, ms) = draw_trial_problem(&cfg, trial, q).map_err(|e| e.to_string())?;
        let path = out_dir.join(format!("instance_q{q}_trial{trial}.txt"));
        fs::write(&path, write_instance(&inst, Some(&ms)))
            .map_err(|e| format!("{}: {e}", path.display()))?;
        println!("{}", path.display());
    }
    for prob in cfg.probability_values() {
        let graph = draw_trial_graph(&cfg, trial, prob).map_err(|e| e.to_string())?;
        let path = out_dir.join(format!("graph_prob{prob}_trial{trial}.edges"));
        fs::write(&path, graph.topology.to_edge_list())
            .map_err(|e| format!("{}: {e}", path.display()))?;
        println!(
            "{} ({} edges, {})",
            path.display(),
            graph.topology.edge_count(),
            if graph.connected {
                "connected"
            } else {
                "disconnected"
            }
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Generate {
            config,
            trial,
            out_dir,
        } => generate(config.resolve()?, trial, &out_dir),
        Command::Run { config, out_dir } => {
            let cfg = config.resolve()?;
            if cfg.has_sweeps() {
                return Err("configuration has sweep lists; use `dlrcs sweep`".into());
            }
            let out = default_out(&cfg, out_dir);
            execute(cfg, out)
        }
        Command::Sweep { config, out_dir } => {
            if config.preset.is_none() && config.config.is_none() && config.overrides().is_empty() {
                return Err(format!(
                    "give --preset ({}) or --config",
                    PRESET_NAMES.join(", ")
                ));
            }
            let cfg = config.resolve()?;
            let out = default_out(&cfg, out_dir);
            execute(cfg, out)
        }
        Command::Plot { dir, metric, title } => {
            let metric: Metric = metric.parse()?;
            let title = if title.is_empty() {
                dir.display().to_string()
            } else {
                title
            };
            let path = replot_directory(&dir, metric, &title).map_err(|e| e.to_string())?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

//! Multi-trial experiment driver.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::{GraphModel, Mode, RunConfig};
use crate::consensus::Aggregation;
use crate::error::{Error, Result};
use crate::init::{federated_spectral_init, InitConfig};
use crate::numerics::Rng;
use crate::problem::{
    generate_instance_scaled, incoherence_mu, partition_columns, take_measurements, MeasurementSet,
    ProblemInstance,
};
use crate::solver::{run_solver, SolverConfig, TrialTrace};
use crate::topology::{
    generate_er_graph, generate_split_er_graph, metropolis_weights, NetworkTopology,
};

pub const STREAM_INSTANCE: u64 = 1;
pub const STREAM_MEASUREMENTS: u64 = 2;
pub const STREAM_PM_START: u64 = 3;
/// Graph attempt `k` (0-based) uses stream `STREAM_GRAPH_BASE + k`.
pub const STREAM_GRAPH_BASE: u64 = 1000;
pub const MAX_GRAPH_ATTEMPTS: usize = 10_000;

/// Seed shared by every setting of trial `trial`.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Defgd,
    Centralized,
}

/// One curve of an experiment: a solver at one point of the sweep grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub kind: SolverKind,
    pub q: usize,
    /// `None` for the centralized baseline.
    pub consensus_rounds: Option<usize>,
    /// `None` for the centralized baseline.
    pub edge_probability: Option<f64>,
    pub label: String,
}

impl Setting {
    /// `label` with spaces and `=` squeezed out, for file names.
    pub fn file_stem(&self) -> String {
        self.label.replace('=', "").replace(' ', "_")
    }
}

/// The sweep grid (`q × C × prob`, in that nesting order), followed by one
/// centralized baseline per `q` when requested.
pub fn settings(cfg: &RunConfig) -> Vec<Setting> {
    let mut out = Vec::new();
    let qs = cfg.q_values();
    if cfg.mode != Mode::Centralized {
        for &q in &qs {
            for &c in &cfg.consensus_values() {
                for &prob in &cfg.probability_values() {
                    let mut label = String::from("defgd");
                    if !cfg.sweep_q.is_empty() {
                        label.push_str(&format!(" q={q}"));
                    }
                    if !cfg.sweep_consensus_rounds.is_empty() {
                        label.push_str(&format!(" C={c}"));
                    }
                    if !cfg.sweep_edge_probability.is_empty() {
                        label.push_str(&format!(" prob={prob}"));
                    }
                    out.push(Setting {
                        kind: SolverKind::Defgd,
                        q,
                        consensus_rounds: Some(c),
                        edge_probability: Some(prob),
                        label,
                    });
                }
            }
        }
    }
    if cfg.mode != Mode::Defgd {
        for &q in &qs {
            let mut label = String::from("centralized");
            if !cfg.sweep_q.is_empty() {
                label.push_str(&format!(" q={q}"));
            }
            out.push(Setting {
                kind: SolverKind::Centralized,
                q,
                consensus_rounds: None,
                edge_probability: None,
                label,
            });
        }
    }
    out
}

/// The communication graph one trial ran on.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialGraph {
    pub trial: usize,
    pub connected: bool,
    /// Draws needed; above 1 only with `require_connected`.
    pub attempts: usize,
    pub topology: NetworkTopology,
}

/// Draws the trial's graph. Probabilities share uniforms per pair, so for a
/// fixed seed a higher probability yields a supergraph.
pub fn draw_trial_graph(cfg: &RunConfig, trial: usize, prob: f64) -> Result<TrialGraph> {
    let seed = trial_seed(cfg.base_seed, trial);
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        let mut rng = Rng::new(seed, STREAM_GRAPH_BASE + attempt as u64);
        let topology = match cfg.graph {
            GraphModel::ErdosRenyi => generate_er_graph(cfg.p, prob, &mut rng)?,
            GraphModel::Split => generate_split_er_graph(cfg.p, prob, &mut rng)?,
        };
        let connected = topology.is_strongly_connected();
        if connected || !cfg.require_connected {
            return Ok(TrialGraph {
                trial,
                connected,
                attempts: attempt + 1,
                topology,
            });
        }
    }
    Err(Error::invalid(format!(
        "no connected graph with p = {} and prob = {prob} in {MAX_GRAPH_ATTEMPTS} draws",
        cfg.p
    )))
}

/// Instance and sketches of one trial.
pub fn draw_trial_problem(
    cfg: &RunConfig,
    trial: usize,
    q: usize,
) -> Result<(ProblemInstance, MeasurementSet)> {
    let seed = trial_seed(cfg.base_seed, trial);
    let inst = generate_instance_scaled(
        cfg.n,
        q,
        cfg.r,
        cfg.b_std,
        &mut Rng::new(seed, STREAM_INSTANCE),
    )?;
    let ms = take_measurements(&inst, cfg.m, &mut Rng::new(seed, STREAM_MEASUREMENTS))?;
    Ok((inst, ms))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSummary {
    pub trial: usize,
    pub eta: f64,
    pub delta: f64,
    /// Incoherence of the trial's instance; logged, never enforced.
    pub mu: f64,
}

#[derive(Clone, Debug)]
struct TrialOutcome {
    trace: TrialTrace,
    graph: Option<TrialGraph>,
    summary: TrialSummary,
}

fn run_setting_trial(
    cfg: &RunConfig,
    trial: usize,
    setting: &Setting,
    problem: &(ProblemInstance, MeasurementSet),
    graph: Option<&TrialGraph>,
) -> Result<TrialOutcome> {
    let (inst, ms) = problem;
    let partition = partition_columns(setting.q, cfg.p)?;
    let weights = graph.map(|g| metropolis_weights(&g.topology));
    let agg = match (&weights, setting.consensus_rounds) {
        (Some(w), Some(rounds)) => Aggregation::Consensus { weights: w, rounds },
        _ => Aggregation::Exact,
    };
    let mut init_cfg = InitConfig::new(cfg.r, cfg.pm_iters);
    init_cfg.lambda = cfg.lambda;
    init_cfg.sync = cfg.basis_sync;
    let seed = trial_seed(cfg.base_seed, trial);
    let init = federated_spectral_init(
        ms,
        &partition,
        &agg,
        &init_cfg,
        &mut Rng::new(seed, STREAM_PM_START),
    )?;

    let mut solver_cfg = SolverConfig::new(init.eta);
    solver_cfg.max_iters = cfg.max_iters;
    solver_cfg.gamma = cfg.gamma;
    solver_cfg.sign = cfg.gradient_sign;
    solver_cfg.scale = cfg.gradient_scale;
    let mut trace = run_solver(inst, ms, &partition, &agg, &init.u0, &solver_cfg)?;
    trace.trial = trial;
    Ok(TrialOutcome {
        trace,
        graph: graph.cloned(),
        summary: TrialSummary {
            trial,
            eta: init.eta,
            delta: init.delta,
            mu: incoherence_mu(inst)?,
        },
    })
}

fn run_trial(cfg: &RunConfig, trial: usize, settings: &[Setting]) -> Vec<Result<TrialOutcome>> {
    let mut problems: BTreeMap<
        usize,
        std::result::Result<(ProblemInstance, MeasurementSet), String>,
    > = BTreeMap::new();
    let mut graphs: Vec<(f64, std::result::Result<TrialGraph, String>)> = Vec::new();
    settings
        .iter()
        .map(|s| {
            let problem = problems
                .entry(s.q)
                .or_insert_with(|| draw_trial_problem(cfg, trial, s.q).map_err(|e| e.to_string()))
                .as_ref()
                .map_err(|e| Error::invalid(e.clone()))?;
            let graph = match s.edge_probability {
                None => None,
                Some(prob) => {
                    let idx = match graphs.iter().position(|(p, _)| *p == prob) {
                        Some(idx) => idx,
                        None => {
                            graphs.push((
                                prob,
                                draw_trial_graph(cfg, trial, prob).map_err(|e| e.to_string()),
                            ));
                            graphs.len() - 1
                        }
                    };
                    Some(
                        graphs[idx]
                            .1
                            .as_ref()
                            .map_err(|e| Error::invalid(e.clone()))?,
                    )
                }
            };
            run_setting_trial(cfg, trial, s, problem, graph)
        })
        .collect()
}

/// Trial-averaged curve point at one iteration index.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub iter: usize,
    pub mean_elapsed_s: f64,
    pub mean_sd_u: f64,
    pub mean_rel_fro: f64,
    /// Trials that reached this iteration.
    pub trials: usize,
}

/// Averages traces at matching iteration indices. A trial that stopped early
/// drops out of later rows, which the `trials` column records.
pub fn aggregate_traces(traces: &[TrialTrace]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    let longest = traces.iter().map(|t| t.rows.len()).max().unwrap_or(0);
    for i in 0..longest {
        let reached: Vec<_> = traces.iter().filter_map(|t| t.rows.get(i)).collect();
        let k = reached.len() as f64;
        rows.push(AggregateRow {
            iter: i + 1,
            mean_elapsed_s: reached.iter().map(|r| r.elapsed_s).sum::<f64>() / k,
            mean_sd_u: reached.iter().map(|r| r.sd_u).sum::<f64>() / k,
            mean_rel_fro: reached.iter().map(|r| r.rel_fro).sum::<f64>() / k,
            trials: reached.len(),
        });
    }
    rows
}

#[derive(Clone, Debug)]
pub struct SettingReport {
    pub setting: Setting,
    /// Successful trials, in trial order.
    pub traces: Vec<TrialTrace>,
    /// Graphs of the successful trials; empty for the centralized baseline.
    pub graphs: Vec<TrialGraph>,
    pub summaries: Vec<TrialSummary>,
    pub aggregate: Vec<AggregateRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialFailure {
    pub setting: String,
    pub trial: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub settings: Vec<SettingReport>,
    pub failures: Vec<TrialFailure>,
}

impl ExperimentReport {
    pub fn setting(&self, label: &str) -> Option<&SettingReport> {
        self.settings.iter().find(|s| s.setting.label == label)
    }
}

/// Runs every setting for every trial, trials in parallel. Trial `t` of every
/// setting shares its seed, so settings are compared on identical instances.
/// Failed trials are reported and skipped; the run fails only when nothing
/// succeeded.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = settings(cfg);
    let per_trial: Vec<Vec<Result<TrialOutcome>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t, &grid))
        .collect();

    let mut reports: Vec<SettingReport> = grid
        .iter()
        .map(|s| SettingReport {
            setting: s.clone(),
            traces: Vec::new(),
            graphs: Vec::new(),
            summaries: Vec::new(),
            aggregate: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    for (trial, outcomes) in per_trial.into_iter().enumerate() {
        for (report, outcome) in reports.iter_mut().zip(outcomes) {
            match outcome {
                Ok(o) => {
                    report.traces.push(o.trace);
                    report.graphs.extend(o.graph);
                    report.summaries.push(o.summary);
                }
                Err(e) => failures.push(TrialFailure {
                    setting: report.setting.label.clone(),
                    trial,
                    message: e.to_string(),
                }),
            }
        }
    }
    if reports.iter().all(|r| r.traces.is_empty()) {
        let first = failures
            .first()
            .map(|f| f.message.clone())
            .unwrap_or_default();
        return Err(Error::AllTrialsFailed(format!(
            "{} failures, first: {first}",
            failures.len()
        )));
    }
    for r in &mut reports {
        r.aggregate = aggregate_traces(&r.traces);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        settings: reports,
        failures,
    })
}

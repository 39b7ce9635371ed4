//! Experiment orchestration: configuration, presets, multi-trial runs and
//! report files.

mod config;
mod experiment;
mod presets;
mod report;

pub use config::{
    apply_config_text, parse_config, write_config, GraphModel, Metric, Mode, RunConfig,
};
pub use experiment::{
    aggregate_traces, draw_trial_graph, draw_trial_problem, run_experiment, settings, trial_seed,
    AggregateRow, ExperimentReport, Setting, SettingReport, SolverKind, TrialFailure, TrialGraph,
    TrialSummary, MAX_GRAPH_ATTEMPTS, STREAM_GRAPH_BASE, STREAM_INSTANCE, STREAM_MEASUREMENTS,
    STREAM_PM_START,
};
pub use presets::{preset, PRESET_NAMES};
pub use report::{
    aggregate_to_csv, emit_report, metric_label, parse_aggregate_csv, render_svg, replot_directory,
    report_plot, PlotSeries, AGGREGATE_CSV_HEADER, CONNECTIVITY_CSV_HEADER, PLOT_FILE,
    SUMMARY_CSV_HEADER,
};

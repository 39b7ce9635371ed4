//! Run configuration and its flat `key = value` file format.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value
//! sweep_consensus_rounds = 1, 10, 50
//! ```
//!
//! Keys are those written by [`write_config`]; unknown or repeated keys are
//! errors, missing keys keep their defaults. List values are comma-separated
//! and may be empty (no sweep).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::init::{BasisSync, LambdaRule};
use crate::solver::{GradientScale, GradientSign};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    Defgd,
    Centralized,
    #[default]
    Both,
}

/// How each trial's communication graph is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GraphModel {
    #[default]
    ErdosRenyi,
    /// Two Erdős–Rényi halves with no links between them.
    Split,
}

/// Error measure drawn in report plots.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Metric {
    #[default]
    SdU,
    RelFro,
}

macro_rules! keyword_enum {
    ($ty:ty { $($variant:path => $word:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $word),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($word => Ok($variant),)+
                    _ => Err(format!(
                        "`{s}` is not one of: {}",
                        [$($word),+].join(", ")
                    )),
                }
            }
        }
    };
}

keyword_enum!(Mode { Mode::Defgd => "defgd", Mode::Centralized => "centralized", Mode::Both => "both" });
keyword_enum!(GraphModel { GraphModel::ErdosRenyi => "erdos_renyi", GraphModel::Split => "split" });
keyword_enum!(Metric { Metric::SdU => "sd_u", Metric::RelFro => "rel_fro" });
keyword_enum!(GradientSign { GradientSign::Descent => "descent", GradientSign::Literal => "literal" });
keyword_enum!(GradientScale {
    GradientScale::Average => "average",
    GradientScale::Sum => "sum",
    GradientScale::PerMeasurement => "per_measurement",
});
keyword_enum!(LambdaRule { LambdaRule::Eigenvalue => "eigenvalue", LambdaRule::SingularValue => "singular_value" });
keyword_enum!(BasisSync { BasisSync::Common => "common", BasisSync::PerNode => "per_node" });

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub n: usize,
    pub q: usize,
    pub r: usize,
    pub m: usize,
    pub p: usize,
    pub edge_probability: f64,
    /// `C`, consensus rounds per aggregation.
    pub consensus_rounds: usize,
    /// `B`, power-method iterations.
    pub pm_iters: usize,
    /// `T`, outer-iteration cap.
    pub max_iters: usize,
    pub gamma: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub mode: Mode,
    pub sweep_q: Vec<usize>,
    pub sweep_consensus_rounds: Vec<usize>,
    pub sweep_edge_probability: Vec<f64>,
    pub gradient_sign: GradientSign,
    pub gradient_scale: GradientScale,
    pub lambda: LambdaRule,
    pub basis_sync: BasisSync,
    /// Standard deviation of the entries of `B̃*`.
    pub b_std: f64,
    pub graph: GraphModel,
    /// Redraw the graph (on fresh streams) until it is connected.
    pub require_connected: bool,
    pub metric: Metric,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            n: 100,
            q: 400,
            r: 4,
            m: 40,
            p: 20,
            edge_probability: 0.5,
            consensus_rounds: 50,
            pm_iters: 30,
            max_iters: 300,
            gamma: 1e-10,
            trials: 1,
            base_seed: 0,
            mode: Mode::Both,
            sweep_q: Vec::new(),
            sweep_consensus_rounds: Vec::new(),
            sweep_edge_probability: Vec::new(),
            gradient_sign: GradientSign::default(),
            gradient_scale: GradientScale::default(),
            lambda: LambdaRule::default(),
            basis_sync: BasisSync::default(),
            b_std: 1.0,
            graph: GraphModel::default(),
            require_connected: false,
            metric: Metric::default(),
        }
    }
}

impl RunConfig {
    pub fn has_sweeps(&self) -> bool {
        !(self.sweep_q.is_empty()
            && self.sweep_consensus_rounds.is_empty()
            && self.sweep_edge_probability.is_empty())
    }

    pub fn q_values(&self) -> Vec<usize> {
        if self.sweep_q.is_empty() {
            vec![self.q]
        } else {
            self.sweep_q.clone()
        }
    }

    pub fn consensus_values(&self) -> Vec<usize> {
        if self.sweep_consensus_rounds.is_empty() {
            vec![self.consensus_rounds]
        } else {
            self.sweep_consensus_rounds.clone()
        }
    }

    pub fn probability_values(&self) -> Vec<f64> {
        if self.sweep_edge_probability.is_empty() {
            vec![self.edge_probability]
        } else {
            self.sweep_edge_probability.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.n == 0 || self.m == 0 || self.p == 0 || self.r == 0 {
            return fail("n, m, p and r must be positive".into());
        }
        for q in self.q_values() {
            if self.r > self.n.min(q) {
                return fail(format!(
                    "rank {} exceeds min(n, q) = {}",
                    self.r,
                    self.n.min(q)
                ));
            }
            if !q.is_multiple_of(self.p) {
                return fail(format!("p = {} does not divide q = {q}", self.p));
            }
        }
        if self.m < self.r {
            return fail(format!("m = {} is below the rank {}", self.m, self.r));
        }
        for prob in self.probability_values() {
            if !(0.0..=1.0).contains(&prob) {
                return fail(format!("edge probability {prob} outside [0, 1]"));
            }
        }
        if self.mode != Mode::Centralized && self.consensus_values().contains(&0) {
            return fail("consensus rounds must be at least 1".into());
        }
        if self.pm_iters == 0 || self.max_iters == 0 {
            return fail("pm_iters and max_iters must be at least 1".into());
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return fail(format!("gamma {} must be nonnegative", self.gamma));
        }
        if !(self.b_std > 0.0 && self.b_std.is_finite()) {
            return fail(format!("b_std {} must be positive", self.b_std));
        }
        if self.graph == GraphModel::Split && self.p < 2 {
            return fail("a split graph needs p >= 2".into());
        }
        if self.graph == GraphModel::Split && self.require_connected {
            return fail("a split graph can never be connected".into());
        }
        if self.name.is_empty() || self.name.contains(['\n', '=']) {
            return fail("name must be a non-empty single line without `=`".into());
        }
        Ok(())
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text form, accepted by [`parse_config`].
pub fn write_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    put("name", cfg.name.clone());
    put("n", cfg.n.to_string());
    put("q", cfg.q.to_string());
    put("r", cfg.r.to_string());
    put("m", cfg.m.to_string());
    put("p", cfg.p.to_string());
    put("edge_probability", cfg.edge_probability.to_string());
    put("consensus_rounds", cfg.consensus_rounds.to_string());
    put("pm_iters", cfg.pm_iters.to_string());
    put("max_iters", cfg.max_iters.to_string());
    put("gamma", format!("{:e}", cfg.gamma));
    put("trials", cfg.trials.to_string());
    put("base_seed", cfg.base_seed.to_string());
    put("mode", cfg.mode.to_string());
    put("sweep_q", join(&cfg.sweep_q));
    put("sweep_consensus_rounds", join(&cfg.sweep_consensus_rounds));
    put("sweep_edge_probability", join(&cfg.sweep_edge_probability));
    put("gradient_sign", cfg.gradient_sign.to_string());
    put("gradient_scale", cfg.gradient_scale.to_string());
    put("lambda", cfg.lambda.to_string());
    put("basis_sync", cfg.basis_sync.to_string());
    put("b_std", cfg.b_std.to_string());
    put("graph", cfg.graph.to_string());
    put("require_connected", cfg.require_connected.to_string());
    put("metric", cfg.metric.to_string());
    out
}

fn value<T: FromStr>(ln: usize, key: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| Error::parse(ln, format!("bad value for `{key}`: {e}")))
}

fn list<T: FromStr>(ln: usize, key: &str, raw: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|t| value(ln, key, t.trim())).collect()
}

/// Applies `key = value` lines onto `base`. Does not validate the result.
pub fn apply_config_text(base: RunConfig, text: &str) -> Result<RunConfig> {
    let mut cfg = base;
    let mut seen: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, val)) = line.split_once('=') else {
            return Err(Error::parse(ln, "expected `key = value`"));
        };
        let (key, val) = (key.trim(), val.trim());
        if seen.iter().any(|k| k == key) {
            return Err(Error::parse(ln, format!("`{key}` given twice")));
        }
        seen.push(key.to_string());
        match key {
            "name" => cfg.name = val.to_string(),
            "n" => cfg.n = value(ln, key, val)?,
            "q" => cfg.q = value(ln, key, val)?,
            "r" => cfg.r = value(ln, key, val)?,
            "m" => cfg.m = value(ln, key, val)?,
            "p" => cfg.p = value(ln, key, val)?,
            "edge_probability" => cfg.edge_probability = value(ln, key, val)?,
            "consensus_rounds" => cfg.consensus_rounds = value(ln, key, val)?,
            "pm_iters" => cfg.pm_iters = value(ln, key, val)?,
            "max_iters" => cfg.max_iters = value(ln, key, val)?,
            "gamma" => cfg.gamma = value(ln, key, val)?,
            "trials" => cfg.trials = value(ln, key, val)?,
            "base_seed" => cfg.base_seed = value(ln, key, val)?,
            "mode" => cfg.mode = value(ln, key, val)?,
            "sweep_q" => cfg.sweep_q = list(ln, key, val)?,
            "sweep_consensus_rounds" => cfg.sweep_consensus_rounds = list(ln, key, val)?,
            "sweep_edge_probability" => cfg.sweep_edge_probability = list(ln, key, val)?,
            "gradient_sign" => cfg.gradient_sign = value(ln, key, val)?,
            "gradient_scale" => cfg.gradient_scale = value(ln, key, val)?,
            "lambda" => cfg.lambda = value(ln, key, val)?,
            "basis_sync" => cfg.basis_sync = value(ln, key, val)?,
            "b_std" => cfg.b_std = value(ln, key, val)?,
            "graph" => cfg.graph = value(ln, key, val)?,
            "require_connected" => cfg.require_connected = value(ln, key, val)?,
            "metric" => cfg.metric = value(ln, key, val)?,
            other => return Err(Error::parse(ln, format!("unknown key `{other}`"))),
        }
    }
    Ok(cfg)
}

/// Parses a config file over the defaults and validates it.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg = apply_config_text(RunConfig::default(), text)?;
    cfg.validate()?;
    Ok(cfg)
}

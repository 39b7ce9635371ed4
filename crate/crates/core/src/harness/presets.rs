//! Named experiment configurations.

use super::config::{Mode, RunConfig};
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 5] = ["exp1-q400", "exp1-q200", "exp2-prob", "exp3-prob-C", "desk"];

const FULL_TRIALS: usize = 100;

fn base(name: &str) -> RunConfig {
    RunConfig {
        name: name.to_string(),
        n: 100,
        q: 400,
        r: 4,
        m: 40,
        p: 20,
        edge_probability: 0.5,
        trials: FULL_TRIALS,
        ..RunConfig::default()
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<RunConfig> {
    let cfg = match name {
        "exp1-q400" | "exp1-q200" => RunConfig {
            q: if name == "exp1-q400" { 400 } else { 200 },
            sweep_consensus_rounds: vec![1, 10, 50, 200],
            mode: Mode::Defgd,
            ..base(name)
        },
        // The caption value C = 50 is an override away.
        "exp2-prob" => RunConfig {
            consensus_rounds: 200,
            sweep_edge_probability: vec![0.04, 0.1, 0.5, 0.9],
            mode: Mode::Defgd,
            ..base(name)
        },
        "exp3-prob-C" => RunConfig {
            sweep_edge_probability: vec![0.3, 0.9],
            sweep_consensus_rounds: vec![5, 50],
            mode: Mode::Defgd,
            ..base(name)
        },
        "desk" => RunConfig {
            consensus_rounds: 50,
            trials: 10,
            max_iters: 150,
            mode: Mode::Both,
            ..base(name)
        },
        other => {
            return Err(Error::invalid(format!(
                "unknown preset `{other}`, expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp1() {
        let c = preset("exp1-q400").unwrap();
        assert_eq!((c.n, c.r, c.q, c.m, c.p), (100, 4, 400, 40, 20));
        assert_eq!(c.edge_probability, 0.5);
        assert_eq!(c.sweep_consensus_rounds, vec![1, 10, 50, 200]);
        assert_eq!(c.trials, 100);
        assert_eq!(preset("exp1-q200").unwrap().q, 200);
    }

    #[test]
    fn exp2_and_exp3() {
        let c = preset("exp2-prob").unwrap();
        assert_eq!(c.sweep_edge_probability, vec![0.04, 0.1, 0.5, 0.9]);
        assert_eq!(c.consensus_rounds, 200);
        let c = preset("exp3-prob-C").unwrap();
        assert_eq!(c.sweep_edge_probability, vec![0.3, 0.9]);
        assert_eq!(c.sweep_consensus_rounds, vec![5, 50]);
    }

    #[test]
    fn desk_and_unknown() {
        let c = preset("desk").unwrap();
        assert_eq!((c.trials, c.max_iters), (10, 150));
        assert!(preset("exp4").is_err());
    }
}

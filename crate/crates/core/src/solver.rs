//! Decentralized projected gradient descent on the column span, with
//! decoupled least squares for the coefficients.
//!
//! Each outer iteration:
//! 1. every node solves `b_k = argmin ‖y_k − A_k U_g b‖` for its columns,
//! 2. forms `Ψ_g = Σ_k A_kᵀ(A_k U_g b_k − y_k) b_kᵀ`,
//! 3. the `Ψ_g` are aggregated (consensus or exact average),
//! 4. every node steps `U_g − η Ψ` and re-orthonormalizes by QR.
//!
//! Node 0's basis is the reported iterate and drives the stopping rule
//! `SD(U⁽ᵗ⁾, U⁽ᵗ⁻¹⁾) ≤ γ`.

use std::time::Instant;

use rayon::prelude::*;

use crate::consensus::{disagreement, Aggregation};
use crate::error::{Error, Result};
use crate::init::max_pairwise_distance;
use crate::numerics::{
    least_squares, qr_orthonormalize, subspace_distance, Matrix, OrthonormalBasis,
};
use crate::problem::{MeasurementSet, Partition, ProblemInstance};
use crate::textio::{fmt_f64, parse_f64, parse_usize};
use crate::topology::WeightMatrix;

/// Sign of the residual inside `Ψ_g`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientSign {
    /// Residual `A_k U b_k − y_k`, so that `U − ηΨ` decreases the loss.
    #[default]
    Descent,
    /// Residual `y_k − A_k U b_k` as literally displayed; `U − ηΨ` ascends.
    Literal,
}

/// What the aggregated gradient approximates.
///
/// With `η = 1/λ_max` from initialization the effective step along the top
/// singular direction is roughly `factor · m · σ²_max / λ_max`, and the
/// projected update only contracts while that stays below 2. `Average` puts it
/// at `m/p`, which is already past the edge for `m = 2p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientScale {
    /// `(1/p) Σ_g Ψ_g`, the plain consensus output.
    Average,
    /// `Σ_g Ψ_g`.
    Sum,
    /// `(1/m) Σ_g Ψ_g`: consensus output times `p/m`.
    #[default]
    PerMeasurement,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub eta: f64,
    pub max_iters: usize,
    pub gamma: f64,
    pub sign: GradientSign,
    pub scale: GradientScale,
    /// Keep node 0's basis after every iteration in the trace.
    pub record_bases: bool,
}

impl SolverConfig {
    pub const DEFAULT_MAX_ITERS: usize = 300;
    pub const DEFAULT_GAMMA: f64 = 1e-10;

    pub fn new(eta: f64) -> Self {
        Self {
            eta,
            max_iters: Self::DEFAULT_MAX_ITERS,
            gamma: Self::DEFAULT_GAMMA,
            sign: GradientSign::default(),
            scale: GradientScale::default(),
            record_bases: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("at least one outer iteration is required"));
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(Error::invalid(format!(
                "stopping tolerance {} is negative",
                self.gamma
            )));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!(
                "step size {} is not a finite nonnegative number",
                self.eta
            )));
        }
        Ok(())
    }
}

/// One node's local view.
#[derive(Clone, Debug)]
pub struct NodeState {
    pub node: usize,
    pub columns: Vec<usize>,
    pub u: OrthonormalBasis,
    /// Coefficients for `columns`, in the same order.
    pub b: Vec<Vec<f64>>,
    /// `U b_k` for `columns`, in the same order.
    pub x_hat: Vec<Vec<f64>>,
    /// Local gradient from the most recent step.
    pub psi: Matrix,
}

impl NodeState {
    pub fn new(
        node: usize,
        columns: Vec<usize>,
        u: OrthonormalBasis,
        ms: &MeasurementSet,
    ) -> Result<Self> {
        let psi = Matrix::zeros(u.dim(), u.rank());
        let mut state = Self {
            node,
            columns,
            u,
            b: Vec::new(),
            x_hat: Vec::new(),
            psi,
        };
        state.refresh(ms)?;
        Ok(state)
    }

    /// Re-solves every owned coefficient vector for the current basis.
    pub fn refresh(&mut self, ms: &MeasurementSet) -> Result<()> {
        self.b = self
            .columns
            .iter()
            .map(|&k| solve_local_coefficients(&self.u, &ms.a[k], &ms.y[k]))
            .collect::<Result<_>>()?;
        let u = self.u.matrix();
        self.x_hat = self.b.iter().map(|bk| u.matvec(bk)).collect();
        Ok(())
    }

    /// `Σ_k ‖y_k − A_k x̂_k‖²` over owned columns.
    pub fn local_loss(&self, ms: &MeasurementSet) -> f64 {
        self.columns
            .iter()
            .zip(&self.x_hat)
            .map(|(&k, xk)| {
                let ax = ms.a[k].matvec(xk);
                ax.iter()
                    .zip(&ms.y[k])
                    .map(|(p, y)| (p - y) * (p - y))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// `argmin_b ‖y_k − A_k U b‖₂` through QR of the `m x r` matrix `A_k U`.
pub fn solve_local_coefficients(
    u: &OrthonormalBasis,
    a_k: &Matrix,
    y_k: &[f64],
) -> Result<Vec<f64>> {
    least_squares(&a_k.matmul(u.matrix()), y_k)
}

/// `Ψ_g = Σ_k A_kᵀ(A_k U b_k − y_k) b_kᵀ`, half the gradient in `U` of
/// `Σ_k ‖y_k − A_k U b_k‖²` at fixed `b`. [`GradientSign::Literal`] negates it.
pub fn local_gradient(
    u: &Matrix,
    columns: &[usize],
    b: &[Vec<f64>],
    ms: &MeasurementSet,
    sign: GradientSign,
) -> Matrix {
    let mut psi = Matrix::zeros(u.rows(), u.cols());
    for (&k, bk) in columns.iter().zip(b) {
        let ak = &ms.a[k];
        let residual: Vec<f64> = ak
            .matvec(&u.matvec(bk))
            .iter()
            .zip(&ms.y[k])
            .map(|(p, y)| p - y)
            .collect();
        psi.add_outer(&ak.tr_matvec(&residual), bk);
    }
    if sign == GradientSign::Literal {
        psi.scale(-1.0);
    }
    psi
}

/// Result of one outer iteration.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub u_next: OrthonormalBasis,
    /// `SD(U⁽ᵗ⁾, U⁽ᵗ⁻¹⁾)` at node 0.
    pub err: f64,
    /// Disagreement of the aggregated gradients across nodes.
    pub psi_disagreement: f64,
}

/// One outer iteration over all nodes. On entry every state must be fresh
/// (coefficients solved for its basis); on exit states hold the new bases with
/// coefficients re-solved.
pub fn defgd_outer_step(
    states: &mut [NodeState],
    ms: &MeasurementSet,
    agg: &Aggregation<'_>,
    cfg: &SolverConfig,
) -> Result<StepOutcome> {
    let p = states.len();
    if p == 0 {
        return Err(Error::invalid("no nodes"));
    }
    states.par_iter_mut().for_each(|s| {
        s.psi = local_gradient(s.u.matrix(), &s.columns, &s.b, ms, cfg.sign);
    });
    let mut aggregated = agg.average(states.iter().map(|s| s.psi.clone()).collect())?;
    let factor = match cfg.scale {
        GradientScale::Average => 1.0,
        GradientScale::Sum => p as f64,
        GradientScale::PerMeasurement => p as f64 / ms.m as f64,
    };
    if factor != 1.0 {
        aggregated.iter_mut().for_each(|m| m.scale(factor));
    }
    let psi_disagreement = disagreement(&aggregated)?;

    let u_prev = states[0].u.clone();
    states
        .par_iter_mut()
        .zip(aggregated.par_iter())
        .try_for_each(|(s, psi)| -> Result<()> {
            let mut step = s.u.matrix().clone();
            step.axpy(-cfg.eta, psi);
            s.u = qr_orthonormalize(&step)?.0;
            s.refresh(ms)
        })?;
    let err = subspace_distance(&states[0].u, &u_prev)?;
    Ok(StepOutcome {
        u_next: states[0].u.clone(),
        err,
        psi_disagreement,
    })
}

/// Per-iteration record.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// Seconds since the loop started, at the end of this iteration.
    pub elapsed_s: f64,
    /// `SD(U*, U⁽ᵗ⁾)`.
    pub sd_u: f64,
    /// `‖X* − X⁽ᵗ⁾‖_F / ‖X*‖_F`.
    pub rel_fro: f64,
    pub psi_disagreement: f64,
    /// `SD(U⁽ᵗ⁾, U⁽ᵗ⁻¹⁾)`.
    pub err_stop: f64,
    /// `Σ_k ‖y_k − A_k x̂_k‖²` after the update.
    pub loss: f64,
    /// Largest pairwise subspace distance between node bases.
    pub node_spread: f64,
    /// Consensus rounds spent so far, excluding initialization.
    pub consensus_rounds: usize,
}

#[derive(Clone, Debug, Default)]
pub struct TrialTrace {
    pub trial: usize,
    pub initial_sd_u: f64,
    pub initial_rel_fro: f64,
    pub initial_loss: f64,
    pub rows: Vec<TraceRow>,
    /// Node 0's basis after each iteration, when requested.
    pub bases: Vec<Matrix>,
}

impl TrialTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

pub const TRACE_CSV_HEADER: &str = "trial,iter,elapsed_s,sd_u,rel_fro,psi_disagreement,err_stop";

/// Appends one CSV line per row, without the header.
pub fn write_trace_rows(out: &mut String, trace: &TrialTrace) {
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            trace.trial,
            row.iter,
            fmt_f64(row.elapsed_s),
            fmt_f64(row.sd_u),
            fmt_f64(row.rel_fro),
            fmt_f64(row.psi_disagreement),
            fmt_f64(row.err_stop)
        ));
    }
}

pub fn traces_to_csv(traces: &[TrialTrace]) -> String {
    let mut out = format!("{TRACE_CSV_HEADER}\n");
    for t in traces {
        write_trace_rows(&mut out, t);
    }
    out
}

/// Parses trace CSV back into per-trial traces, grouped by trial id in order of
/// first appearance. Columns absent from the CSV are left at zero.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TrialTrace>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_CSV_HEADER => {}
        Some((i, _)) => {
            return Err(Error::parse(
                i + 1,
                format!("expected header `{TRACE_CSV_HEADER}`"),
            ))
        }
        None => return Err(Error::parse(0, "empty trace file")),
    }
    let mut traces: Vec<TrialTrace> = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 7 {
            return Err(Error::parse(
                ln,
                format!("expected 7 fields, found {}", fields.len()),
            ));
        }
        let trial = parse_usize(ln, fields[0])?;
        let row = TraceRow {
            iter: parse_usize(ln, fields[1])?,
            elapsed_s: parse_f64(ln, fields[2])?,
            sd_u: parse_f64(ln, fields[3])?,
            rel_fro: parse_f64(ln, fields[4])?,
            psi_disagreement: parse_f64(ln, fields[5])?,
            err_stop: parse_f64(ln, fields[6])?,
            loss: 0.0,
            node_spread: 0.0,
            consensus_rounds: 0,
        };
        let idx = match traces.iter().position(|t| t.trial == trial) {
            Some(idx) => idx,
            None => {
                traces.push(TrialTrace {
                    trial,
                    ..Default::default()
                });
                traces.len() - 1
            }
        };
        let trace = &mut traces[idx];
        if trace.last().is_some_and(|prev| prev.iter >= row.iter) {
            return Err(Error::parse(ln, "iterations must increase within a trial"));
        }
        trace.rows.push(row);
    }
    Ok(traces)
}

fn relative_frobenius_error(inst: &ProblemInstance, states: &[NodeState]) -> f64 {
    let mut err = 0.0;
    for s in states {
        for (&k, xk) in s.columns.iter().zip(&s.x_hat) {
            for (i, &v) in xk.iter().enumerate() {
                let d = inst.x_star[(i, k)] - v;
                err += d * d;
            }
        }
    }
    err.sqrt() / inst.x_star.frobenius_norm()
}

fn node_spread(states: &[NodeState]) -> Result<f64> {
    let bases: Vec<OrthonormalBasis> = states.iter().map(|s| s.u.clone()).collect();
    max_pairwise_distance(&bases)
}

/// Runs the outer loop from the common start `u0` until `max_iters` iterations
/// or `err ≤ gamma`. Hitting the iteration cap is not an error.
pub fn run_solver(
    inst: &ProblemInstance,
    ms: &MeasurementSet,
    partition: &Partition,
    agg: &Aggregation<'_>,
    u0: &OrthonormalBasis,
    cfg: &SolverConfig,
) -> Result<TrialTrace> {
    cfg.validate()?;
    if let Aggregation::Consensus { weights, rounds } = agg {
        if *rounds == 0 {
            return Err(Error::invalid(
                "at least one consensus round per iteration is required",
            ));
        }
        if weights.p() != partition.nodes() {
            return Err(Error::dims(format!(
                "{} partitions for a {}-node graph",
                partition.nodes(),
                weights.p()
            )));
        }
    }
    if ms.q() != inst.q || ms.n() != inst.n || partition.total_columns() != inst.q {
        return Err(Error::dims("instance, sketches and partition disagree"));
    }
    if u0.dim() != inst.n {
        return Err(Error::dims(format!(
            "start basis lives in R^{}, instance in R^{}",
            u0.dim(),
            inst.n
        )));
    }

    let mut states = (0..partition.nodes())
        .into_par_iter()
        .map(|g| NodeState::new(g, partition.columns(g).to_vec(), u0.clone(), ms))
        .collect::<Result<Vec<_>>>()?;
    let mut trace = TrialTrace {
        initial_sd_u: subspace_distance(&inst.u_star, u0)?,
        initial_rel_fro: relative_frobenius_error(inst, &states),
        initial_loss: states.iter().map(|s| s.local_loss(ms)).sum(),
        ..Default::default()
    };

    let started = Instant::now();
    let mut err = f64::INFINITY;
    let mut t = 1;
    while t <= cfg.max_iters && err > cfg.gamma {
        let step = defgd_outer_step(&mut states, ms, agg, cfg)?;
        err = step.err;
        let row = TraceRow {
            iter: t,
            elapsed_s: started.elapsed().as_secs_f64(),
            sd_u: subspace_distance(&inst.u_star, &step.u_next)?,
            rel_fro: relative_frobenius_error(inst, &states),
            psi_disagreement: step.psi_disagreement,
            err_stop: step.err,
            loss: states.iter().map(|s| s.local_loss(ms)).sum(),
            node_spread: node_spread(&states)?,
            consensus_rounds: t * agg.rounds(),
        };
        trace.rows.push(row);
        if cfg.record_bases {
            trace.bases.push(step.u_next.into_matrix());
        }
        t += 1;
    }
    Ok(trace)
}

/// Decentralized run: `rounds` consensus rounds with `weights` per iteration.
pub fn run_defgd(
    inst: &ProblemInstance,
    ms: &MeasurementSet,
    partition: &Partition,
    weights: &WeightMatrix,
    rounds: usize,
    u0: &OrthonormalBasis,
    cfg: &SolverConfig,
) -> Result<TrialTrace> {
    run_solver(
        inst,
        ms,
        partition,
        &Aggregation::Consensus { weights, rounds },
        u0,
        cfg,
    )
}

/// Central-server baseline: identical loop with exact gradient averaging.
pub fn run_centralized_baseline(
    inst: &ProblemInstance,
    ms: &MeasurementSet,
    partition: &Partition,
    u0: &OrthonormalBasis,
    cfg: &SolverConfig,
) -> Result<TrialTrace> {
    run_solver(inst, ms, partition, &Aggregation::Exact, u0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, Rng};
    use crate::problem::{generate_instance, partition_columns, take_measurements};

    fn small(seed: u64) -> (ProblemInstance, MeasurementSet) {
        let inst = generate_instance(8, 6, 2, &mut Rng::new(seed, 0)).unwrap();
        let ms = take_measurements(&inst, 5, &mut Rng::new(seed, 1)).unwrap();
        (inst, ms)
    }

    #[test]
    fn true_basis_recovers_coefficients() {
        let (inst, ms) = small(1);
        for k in 0..inst.q {
            let b = solve_local_coefficients(&inst.u_star, &ms.a[k], &ms.y[k]).unwrap();
            for (bi, ti) in b.iter().zip(inst.b_tilde_star.column(k)) {
                assert!((bi - ti).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_sketch_gives_zero_coefficients() {
        let (inst, ms) = small(2);
        let b = solve_local_coefficients(&inst.u_star, &ms.a[0], &[0.0; 5]).unwrap();
        assert!(b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let (inst, ms) = small(3);
        let cols: Vec<usize> = (0..inst.q).collect();
        let b: Vec<Vec<f64>> = cols
            .iter()
            .map(|&k| solve_local_coefficients(&inst.u_star, &ms.a[k], &ms.y[k]).unwrap())
            .collect();
        let psi = local_gradient(inst.u_star.matrix(), &cols, &b, &ms, GradientSign::Descent);
        let scale: f64 =
            ms.a.iter().map(|a| a.frobenius_norm()).sum::<f64>() * inst.x_star.frobenius_norm();
        assert!(psi.frobenius_norm() <= 1e-9 * scale);
    }

    #[test]
    fn single_measurement_gradient_collapses() {
        let mut rng = Rng::new(4, 0);
        let a = gaussian_matrix(1, 3, &mut rng).unwrap();
        let ms = MeasurementSet {
            m: 1,
            a: vec![a.clone()],
            y: vec![vec![0.7]],
        };
        let u = OrthonormalBasis::random(3, 2, &mut rng).unwrap();
        let b = vec![vec![0.4, -1.1]];
        let psi = local_gradient(u.matrix(), &[0], &b, &ms, GradientSign::Descent);
        let pred: f64 = a.matvec(&u.matrix().matvec(&b[0]))[0];
        for i in 0..3 {
            for j in 0..2 {
                let expect = (pred - 0.7) * a[(0, i)] * b[0][j];
                assert!((psi[(i, j)] - expect).abs() < 1e-14);
            }
        }
        let lit = local_gradient(u.matrix(), &[0], &b, &ms, GradientSign::Literal);
        assert_eq!(lit, psi.scaled(-1.0));
    }

    #[test]
    fn zero_step_keeps_basis() {
        let (inst, ms) = small(5);
        let part = partition_columns(6, 2).unwrap();
        let u0 = OrthonormalBasis::random(8, 2, &mut Rng::new(5, 2)).unwrap();
        let mut states: Vec<NodeState> = (0..2)
            .map(|g| NodeState::new(g, part.columns(g).to_vec(), u0.clone(), &ms).unwrap())
            .collect();
        let out = defgd_outer_step(
            &mut states,
            &ms,
            &Aggregation::Exact,
            &SolverConfig::new(0.0),
        )
        .unwrap();
        assert!(out.u_next.matrix().sub(u0.matrix()).max_abs() < 1e-14);
        assert!(out.err < 1e-14);
        let _ = inst;
    }

    #[test]
    fn start_at_truth_stops_immediately() {
        let (inst, ms) = small(6);
        let part = partition_columns(6, 3).unwrap();
        let mut cfg = SolverConfig::new(0.01);
        cfg.gamma = 1e-10;
        let trace = run_centralized_baseline(&inst, &ms, &part, &inst.u_star, &cfg).unwrap();
        assert_eq!(trace.rows.len(), 1);
        let row = &trace.rows[0];
        assert!(row.err_stop <= 1e-10 && row.sd_u < 1e-12 && row.rel_fro < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let (inst, ms) = small(7);
        let part = partition_columns(6, 2).unwrap();
        let u0 = OrthonormalBasis::random(8, 2, &mut Rng::new(7, 2)).unwrap();
        let mut cfg = SolverConfig::new(0.01);
        cfg.max_iters = 4;
        let mut trace = run_centralized_baseline(&inst, &ms, &part, &u0, &cfg).unwrap();
        trace.trial = 3;
        let csv = traces_to_csv(&[trace.clone()]);
        assert!(csv.starts_with(TRACE_CSV_HEADER));
        let back = parse_trace_csv(&csv).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].trial, 3);
        for (a, b) in back[0].rows.iter().zip(&trace.rows) {
            assert_eq!(
                (a.iter, a.sd_u, a.rel_fro, a.err_stop),
                (b.iter, b.sd_u, b.rel_fro, b.err_stop)
            );
        }
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(parse_trace_csv("").is_err());
        assert!(parse_trace_csv("a,b\n").is_err());
        let h = TRACE_CSV_HEADER;
        assert!(parse_trace_csv(&format!("{h}\n0,1,0,0,0,0\n")).is_err());
        assert!(parse_trace_csv(&format!("{h}\n0,2,0,0,0,0,0\n0,1,0,0,0,0,0\n")).is_err());
        assert!(parse_trace_csv(&format!("{h}\n0,1,0,NaN,0,0,0\n")).is_err());
    }
}

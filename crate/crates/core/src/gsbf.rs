//! Three-stage group sparse beamforming.
//!
//! Stage 1 induces group sparsity, either with the proximal iteratively
//! reweighted loop on the log-sum penalty or with a single weighted mixed
//! l1,2 solve. Stage 2 ranks tasks by a channel-aware priority and scans
//! for the shortest feasible prefix of that ranking. Stage 3 minimizes
//! transmit power on the selected support. Coordinated beamforming (all
//! tasks, minimum transmit power) is the dense baseline.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{
    build_cb, build_feasibility, build_mixed_l12, build_refinement, build_stage1, ClarabelSolver,
    ConicSolver, SolveResult, SolveStatus, DEFAULT_SOLVER_TOL,
};
use crate::diagnostics::{
    log_sum_objective, model_reduction, residual_bound_from_displacement, CertificateParams,
};
use crate::error::{Error, Result, Stage};
use crate::netmodel::{
    power_breakdown, validate, BeamformingSolution, ChannelRealization, ConstraintReport,
    NetworkConfig, PowerBreakdown, Task, TaskSet, Tolerance, DEFAULT_ZERO_TOL,
};

/// How Stage 2 searches for the feasible cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutSearch {
    /// `t = K, K + 1, ..` until feasible.
    #[default]
    Linear,
    /// Binary search over `[K, NK]`; valid because feasibility is monotone in `t`.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmParams {
    /// Log-sum sharpness.
    pub p: f64,
    /// Proximal coefficient.
    pub beta: f64,
    pub iter_max: usize,
    /// Stop once `||w_next - w||_1 <= eps`.
    pub eps: f64,
    pub zero_tol: f64,
    pub solver_tol: f64,
    pub cut_search: CutSearch,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        AlgorithmParams {
            p: 100.0,
            beta: 0.1,
            iter_max: 25,
            eps: 1e-5,
            zero_tol: DEFAULT_ZERO_TOL,
            solver_tol: DEFAULT_SOLVER_TOL,
            cut_search: CutSearch::Linear,
        }
    }
}

impl AlgorithmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p", self.p),
            ("beta", self.beta),
            ("eps", self.eps),
            ("zero_tol", self.zero_tol),
            ("solver_tol", self.solver_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.iter_max == 0 {
            return Err(Error::InvalidConfig("iter_max must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of Stage 2: a priority order over all tasks and the cut `t`.
/// The selected tasks are the first `t` entries of the order.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSelection {
    order: Vec<Task>,
    cut: usize,
    tasks: TaskSet,
    /// Feasibility programs actually solved to find the cut.
    pub feasibility_solves: usize,
}

impl TaskSelection {
    pub fn new(order: Vec<Task>, cut: usize) -> Self {
        let tasks = order[..cut].iter().copied().collect();
        TaskSelection {
            order,
            cut,
            tasks,
            feasibility_solves: 0,
        }
    }

    /// Every task, in index order.
    pub fn all(cfg: &NetworkConfig) -> Self {
        let order: Vec<Task> = cfg.dims().tasks().collect();
        let cut = order.len();
        Self::new(order, cut)
    }

    pub fn order(&self) -> &[Task] {
        &self.order
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    pub fn tasks(&self) -> &TaskSet {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.cut
    }

    pub fn is_empty(&self) -> bool {
        self.cut == 0
    }
}

/// One pass of the reweighted loop, producing `v^{i}` from `v^{i-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Log-sum objective at the new iterate.
    pub omega: f64,
    /// Weights used in this subproblem.
    pub weights: Vec<f64>,
    /// `||v^{i-1} - v^{i}||`.
    pub displacement: f64,
    /// Surrogate decrease `G(v^{i-1}) - G(v^{i})` around `v^{i-1}`.
    pub model_reduction: f64,
    pub residual_bound: f64,
    /// `||w^{i} - w^{i-1}||_1` after reweighting.
    pub weight_change: f64,
    pub feasible: bool,
    pub wall: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    /// Log-sum objective at the initial point.
    pub initial_omega: f64,
    pub records: Vec<IterationRecord>,
    pub params: CertificateParams,
    /// Whether the weight-change test fired before `iter_max`.
    pub converged: bool,
}

impl ConvergenceTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Objective values including the initial point.
    pub fn omegas(&self) -> Vec<f64> {
        std::iter::once(self.initial_omega)
            .chain(self.records.iter().map(|r| r.omega))
            .collect()
    }

    pub fn final_omega(&self) -> f64 {
        self.records.last().map_or(self.initial_omega, |r| r.omega)
    }
}

/// `rho_nk = sqrt(P^c_nk / eta_n)`.
pub fn rho_weights(cfg: &NetworkConfig) -> Vec<f64> {
    cfg.dims()
        .tasks()
        .map(|t| (cfg.p_compute(t) / cfg.eta[t.bs]).sqrt())
        .collect()
}

/// `w_nk = p rho_nk / (p ||v_nk|| + 1)`.
pub fn update_weights(sol: &BeamformingSolution, rho: &[f64], p: f64) -> Vec<f64> {
    sol.group_norms()
        .iter()
        .zip(rho)
        .map(|(norm, r)| p * r / (p * norm + 1.0))
        .collect()
}

fn primal(result: SolveResult, stage: Stage, zero_tol: f64) -> Result<BeamformingSolution> {
    match result.status {
        SolveStatus::Optimal | SolveStatus::Inaccurate => Ok(result
            .beamformer
            .expect("primal present for optimal status")
            .with_zero_tol(zero_tol)),
        SolveStatus::Infeasible => Err(Error::InstanceInfeasible { stage }),
        status => Err(Error::SolverFailure { stage, status }),
    }
}

/// Coordinated-beamforming solution; its infeasibility certifies that the
/// whole instance is infeasible.
pub fn initial_point(
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> Result<BeamformingSolution> {
    let solver = ClarabelSolver::default();
    primal(
        solver.solve(&build_cb(ch, cfg), params.solver_tol),
        Stage::InitialPoint,
        params.zero_tol,
    )
}

/// Stage-1 failure with the iterations completed before it.
#[derive(Debug, Error)]
#[error("{source}")]
pub struct Stage1Error {
    pub source: Error,
    pub partial_trace: Option<ConvergenceTrace>,
}

impl From<Stage1Error> for Error {
    fn from(e: Stage1Error) -> Self {
        e.source
    }
}

/// Proximal iteratively reweighted minimization of the log-sum penalty,
/// started from the coordinated-beamforming point.
pub fn prox_irw(
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> std::result::Result<(BeamformingSolution, ConvergenceTrace), Stage1Error> {
    let v0 = initial_point(ch, cfg, params).map_err(|source| Stage1Error {
        source,
        partial_trace: None,
    })?;
    prox_irw_from(v0, ch, cfg, params)
}

/// Same loop from a caller-supplied feasible start.
pub fn prox_irw_from(
    v0: BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> std::result::Result<(BeamformingSolution, ConvergenceTrace), Stage1Error> {
    let solver = ClarabelSolver::default();
    let rho = rho_weights(cfg);
    let full = TaskSet::full(cfg.dims());
    let tolerance = Tolerance::default();
    let mut trace = ConvergenceTrace {
        initial_omega: log_sum_objective(&v0, &rho, params.p),
        records: Vec::with_capacity(params.iter_max),
        params: CertificateParams::new(&rho, params.p, params.beta),
        converged: false,
    };
    let mut v = v0;
    let mut weights = vec![1.0; cfg.dims().num_groups()];
    for iteration in 1..=params.iter_max {
        let start = Instant::now();
        let prog = build_stage1(&weights, &v, params.beta, ch, cfg);
        let next = match primal(
            solver.solve(&prog, params.solver_tol),
            Stage::SparseStage1,
            params.zero_tol,
        ) {
            Ok(next) => next,
            Err(source) => {
                // The previous iterate is feasible, so "infeasible" here is numerical.
                let source = match source {
                    Error::InstanceInfeasible { stage } => Error::SolverFailure {
                        stage,
                        status: SolveStatus::Infeasible,
                    },
                    other => other,
                };
                return Err(Stage1Error {
                    source,
                    partial_trace: Some(trace),
                });
            }
        };
        let next_weights = update_weights(&next, &rho, params.p);
        let weight_change: f64 = next_weights
            .iter()
            .zip(&weights)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let displacement = v.distance(&next);
        trace.records.push(IterationRecord {
            iteration,
            omega: log_sum_objective(&next, &rho, params.p),
            model_reduction: model_reduction(&v, &next, &weights, params.beta),
            residual_bound: residual_bound_from_displacement(displacement, &trace.params),
            displacement,
            weights: std::mem::replace(&mut weights, next_weights),
            weight_change,
            feasible: validate(&next, &full, ch, cfg, &tolerance).passed,
            wall: start.elapsed(),
        });
        v = next;
        if weight_change <= params.eps {
            trace.converged = true;
            break;
        }
    }
    Ok((v, trace))
}

/// `theta_nk = sqrt(||h_nk||^2 eta_n / P^c_nk) ||v_nk||`; zero-cost tasks get `+inf`.
pub fn task_priorities(
    sol: &BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Vec<f64> {
    cfg.dims()
        .tasks()
        .map(|t| {
            let pc = cfg.p_compute(t);
            if pc == 0.0 {
                f64::INFINITY
            } else {
                (ch.gain_sq(t.bs, t.user) * cfg.eta[t.bs] / pc).sqrt() * sol.group_norm(t)
            }
        })
        .collect()
}

/// Tasks by descending priority; ties go to the smaller `(n, k)`.
pub fn priority_order(priorities: &[f64], cfg: &NetworkConfig) -> Vec<Task> {
    let dims = cfg.dims();
    let mut idx: Vec<usize> = (0..dims.num_groups()).collect();
    idx.sort_by(|&a, &b| {
        priorities[b]
            .partial_cmp(&priorities[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.into_iter().map(|g| dims.task(g)).collect()
}

struct CutProbe<'a> {
    order: &'a [Task],
    ch: &'a ChannelRealization,
    cfg: &'a NetworkConfig,
    params: &'a AlgorithmParams,
    solver: ClarabelSolver,
    solves: usize,
}

impl CutProbe<'_> {
    fn feasible(&mut self, cut: usize) -> Result<bool> {
        let dims = self.cfg.dims();
        let kept: TaskSet = self.order[..cut].iter().copied().collect();
        // A user without any serving task cannot meet a positive SINR target.
        if !kept.covers_all_users(dims) {
            return Ok(false);
        }
        let inactive = kept.complement(dims);
        self.solves += 1;
        let result = self
            .solver
            .solve(&build_feasibility(&inactive, self.ch, self.cfg), self.params.solver_tol);
        match result.status {
            SolveStatus::Optimal => Ok(true),
            SolveStatus::Inaccurate => {
                let sol = result.beamformer.expect("primal present");
                let loose = Tolerance {
                    sinr_rel: 1e-4,
                    power_abs: 1e-6,
                    zero_abs: self.params.zero_tol,
                };
                Ok(validate(&sol, &kept, self.ch, self.cfg, &loose).passed)
            }
            SolveStatus::Infeasible => Ok(false),
            status => Err(Error::SolverFailure {
                stage: Stage::TaskSelection,
                status,
            }),
        }
    }
}

/// Finds the shortest feasible prefix of the priority order, starting at `t = K`.
pub fn select_tasks(
    priorities: &[f64],
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> Result<TaskSelection> {
    let order = priority_order(priorities, cfg);
    let total = order.len();
    let first = cfg.num_users.min(total);
    let mut probe = CutProbe {
        order: &order,
        ch,
        cfg,
        params,
        solver: ClarabelSolver::default(),
        solves: 0,
    };
    let cut = match params.cut_search {
        CutSearch::Linear => {
            let mut found = None;
            for t in first..=total {
                if probe.feasible(t)? {
                    found = Some(t);
                    break;
                }
            }
            found
        }
        CutSearch::Bisection => {
            if !probe.feasible(total)? {
                None
            } else {
                let (mut lo, mut hi) = (first, total);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if probe.feasible(mid)? {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                Some(hi)
            }
        }
    };
    let solves = probe.solves;
    let cut = cut.ok_or(Error::InstanceInfeasible {
        stage: Stage::TaskSelection,
    })?;
    let mut selection = TaskSelection::new(order, cut);
    selection.feasibility_solves = solves;
    Ok(selection)
}

/// Minimum-transmit-power beamformer on the selected support.
pub fn refine(
    selection: &TaskSelection,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> Result<BeamformingSolution> {
    let inactive = selection.tasks().complement(cfg.dims());
    primal(
        ClarabelSolver::default().solve(&build_refinement(&inactive, ch, cfg), params.solver_tol),
        Stage::Refinement,
        params.zero_tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub stage1: Duration,
    pub stage2: Duration,
    pub stage3: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.stage1 + self.stage2 + self.stage3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Output {
    pub solution: BeamformingSolution,
    /// Present for the reweighted loop.
    pub trace: Option<ConvergenceTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineStatus {
    Ok,
    /// The final beamformer did not pass constraint validation.
    ValidationFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    /// Absent for coordinated beamforming.
    pub stage1: Option<Stage1Output>,
    pub selection: TaskSelection,
    pub refined: BeamformingSolution,
    pub power: PowerBreakdown,
    pub report: ConstraintReport,
    pub timings: StageTimings,
    pub status: PipelineStatus,
}

impl PipelineResult {
    pub fn iterations(&self) -> usize {
        self.stage1
            .as_ref()
            .and_then(|s| s.trace.as_ref())
            .map_or(0, |t| t.iterations())
    }
}

fn finish(
    stage1: Option<Stage1Output>,
    selection: TaskSelection,
    refined: BeamformingSolution,
    timings: StageTimings,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<PipelineResult> {
    let report = validate(&refined, selection.tasks(), ch, cfg, &Tolerance::default());
    let power = power_breakdown(&refined, selection.tasks(), cfg)?;
    let status = if report.passed {
        PipelineStatus::Ok
    } else {
        PipelineStatus::ValidationFailed
    };
    Ok(PipelineResult {
        stage1,
        selection,
        refined,
        power,
        report,
        timings,
        status,
    })
}

/// Stages 2 and 3 from a given Stage-1 output.
pub fn complete_pipeline(
    stage1: Stage1Output,
    stage1_time: Duration,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> Result<PipelineResult> {
    let start = Instant::now();
    let priorities = task_priorities(&stage1.solution, ch, cfg);
    let selection = select_tasks(&priorities, ch, cfg, params)?;
    let stage2 = start.elapsed();
    let start = Instant::now();
    let refined = refine(&selection, ch, cfg, params)?;
    let timings = StageTimings {
        stage1: stage1_time,
        stage2,
        stage3: start.elapsed(),
    };
    finish(Some(stage1), selection, refined, timings, ch, cfg)
}

/// Log-sum three-stage pipeline.
pub fn run_three_stage(
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> Result<PipelineResult> {
    params.validate()?;
    let start = Instant::now();
    let (solution, trace) = prox_irw(ch, cfg, params)?;
    let stage1 = Stage1Output {
        solution,
        trace: Some(trace),
    };
    complete_pipeline(stage1, start.elapsed(), ch, cfg, params)
}

/// Mixed l1,2 baseline: one weighted group-norm solve, then Stages 2 and 3.
pub fn run_mixed_l12(
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> Result<PipelineResult> {
    params.validate()?;
    let start = Instant::now();
    let rho = rho_weights(cfg);
    let result = ClarabelSolver::default().solve(&build_mixed_l12(&rho, ch, cfg), params.solver_tol);
    let solution = primal(result, Stage::SparseStage1, params.zero_tol)?;
    let stage1 = Stage1Output {
        solution,
        trace: None,
    };
    complete_pipeline(stage1, start.elapsed(), ch, cfg, params)
}

/// Coordinated beamforming: all tasks, minimum transmit power.
pub fn run_cb(
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    params: &AlgorithmParams,
) -> Result<PipelineResult> {
    let start = Instant::now();
    let refined = initial_point(ch, cfg, params)?;
    let timings = StageTimings {
        stage3: start.elapsed(),
        ..StageTimings::default()
    };
    finish(None, TaskSelection::all(cfg), refined, timings, ch, cfg)
}

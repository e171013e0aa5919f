//! Exhaustive search over task supports for small instances.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::conic::{build_refinement, ClarabelSolver, ConicSolver, SolveStatus, DEFAULT_SOLVER_TOL};
use crate::error::{Error, Result, Stage};
use crate::netmodel::{
    power_breakdown, validate, BeamformingSolution, ChannelRealization, NetworkConfig,
    PowerBreakdown, TaskSet, Tolerance, DEFAULT_ZERO_TOL,
};

/// Largest `N K` accepted by the enumeration.
pub const MAX_ORACLE_TASKS: usize = 12;

fn guard(num_bs: usize, num_users: usize) -> Result<usize> {
    let tasks = num_bs * num_users;
    if tasks > MAX_ORACLE_TASKS {
        return Err(Error::SizeGuard {
            tasks,
            limit: MAX_ORACLE_TASKS,
        });
    }
    Ok(tasks)
}

/// All supports in which every user is served by at least one BS, in
/// increasing bitmask order (bit `n K + k` is task `(n, k)`).
pub fn enumerate_supports(
    num_bs: usize,
    num_users: usize,
) -> Result<impl Iterator<Item = TaskSet>> {
    let tasks = guard(num_bs, num_users)?;
    let dims = crate::netmodel::Dims::new(num_bs, num_users, 1);
    Ok((0u32..1 << tasks).filter_map(move |mask| {
        let set: TaskSet = (0..tasks)
            .filter(|g| mask & (1 << g) != 0)
            .map(|g| dims.task(g))
            .collect();
        set.covers_all_users(dims).then_some(set)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub support: TaskSet,
    pub solution: BeamformingSolution,
    pub power: PowerBreakdown,
    pub enumerated: usize,
    pub feasible: usize,
}

impl OracleResult {
    pub fn total_w(&self) -> f64 {
        self.power.total_w
    }
}

struct Candidate {
    support: TaskSet,
    solution: BeamformingSolution,
    power: PowerBreakdown,
}

fn better(a: &Candidate, b: &Candidate) -> Ordering {
    a.power
        .total_w
        .total_cmp(&b.power.total_w)
        .then(a.support.len().cmp(&b.support.len()))
        .then_with(|| a.support.iter().cmp(b.support.iter()))
}

fn solve_support(
    support: TaskSet,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<Option<Candidate>> {
    let inactive = support.complement(cfg.dims());
    let result = ClarabelSolver::default().solve(&build_refinement(&inactive, ch, cfg), DEFAULT_SOLVER_TOL);
    let solution = match result.status {
        SolveStatus::Infeasible => return Ok(None),
        SolveStatus::Optimal | SolveStatus::Inaccurate => result.beamformer.expect("primal present"),
        status => {
            return Err(Error::SolverFailure {
                stage: Stage::Oracle,
                status,
            })
        }
    };
    if result.status == SolveStatus::Inaccurate
        && !validate(&solution, &support, ch, cfg, &Tolerance::default()).passed
    {
        return Ok(None);
    }
    let power = power_breakdown(&solution, &support, cfg)?;
    Ok(Some(Candidate {
        support,
        solution,
        power,
    }))
}

/// Global minimum of transmit plus compute power over all covering supports.
/// Ties go to the smaller support, then the lexicographically smaller one.
pub fn oracle_min_power(ch: &ChannelRealization, cfg: &NetworkConfig) -> Result<OracleResult> {
    let supports: Vec<TaskSet> = enumerate_supports(cfg.num_bs, cfg.num_users)?.collect();
    let enumerated = supports.len();
    let candidates = supports
        .into_par_iter()
        .map(|s| solve_support(s, ch, cfg))
        .collect::<Result<Vec<_>>>()?;
    let feasible = candidates.iter().flatten().count();
    let best = candidates
        .into_iter()
        .flatten()
        .min_by(better)
        .ok_or(Error::InstanceInfeasible {
            stage: Stage::Oracle,
        })?;
    Ok(OracleResult {
        support: best.support,
        solution: best.solution.with_zero_tol(DEFAULT_ZERO_TOL),
        power: best.power,
        enumerated,
        feasible,
    })
}

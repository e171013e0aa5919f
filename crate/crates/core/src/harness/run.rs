use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Method, WORKERS_ENV};
use crate::error::{Error, Result};
use crate::gsbf::{
    complete_pipeline, prox_irw, run_cb, run_mixed_l12, ConvergenceTrace, PipelineStatus,
    Stage1Output,
};
use crate::netmodel::{
    generate_channels, generate_topology, validate, ChannelRealization, NetworkConfig, Tolerance,
};
use crate::oracle::oracle_min_power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    /// The instance has no feasible beamformer.
    Infeasible,
    /// A beamformer was returned but failed constraint validation.
    Invalid,
    /// Solver breakdown or another internal error.
    Failed,
}

/// One method on one realization. Power fields are empty unless a
/// beamformer was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub sinr_db: f64,
    pub method: Method,
    pub total_w: Option<f64>,
    pub transmit_w: Option<f64>,
    pub compute_w: Option<f64>,
    pub task_count: Option<usize>,
    pub iterations: usize,
    pub status: TrialStatus,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    /// Stage-1 trace of the log-sum method, including partial traces of
    /// failed runs.
    pub trace: Option<ConvergenceTrace>,
}

/// `GSBF_WORKERS` when set to a positive integer, otherwise `configured`;
/// 0 means one worker per core.
pub fn resolve_workers(configured: usize) -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or(configured)
}

fn error_status(e: &Error) -> TrialStatus {
    if e.is_infeasible() {
        TrialStatus::Infeasible
    } else {
        TrialStatus::Failed
    }
}

fn run_method(
    method: Method,
    seed: u64,
    sinr_db: f64,
    ch: &ChannelRealization,
    net: &NetworkConfig,
    cfg: &ExperimentConfig,
) -> TrialOutcome {
    let params = cfg.algorithm_params();
    let start = Instant::now();
    let mut record = TrialRecord {
        seed,
        sinr_db,
        method,
        total_w: None,
        transmit_w: None,
        compute_w: None,
        task_count: None,
        iterations: 0,
        status: TrialStatus::Ok,
        wall_ms: 0.0,
    };
    let mut trace = None;
    let outcome = match method {
        Method::Logsum => match prox_irw(ch, net, &params) {
            Err(e) => {
                trace = e.partial_trace;
                Err(e.source)
            }
            Ok((solution, t)) => {
                let stage1 = Stage1Output {
                    solution,
                    trace: Some(t),
                };
                complete_pipeline(stage1, start.elapsed(), ch, net, &params).map(Some)
            }
        },
        Method::MixedL12 => run_mixed_l12(ch, net, &params).map(Some),
        Method::Cb => run_cb(ch, net, &params).map(Some),
        Method::Oracle => oracle_min_power(ch, net).map(|o| {
            let passed = validate(&o.solution, &o.support, ch, net, &Tolerance::default()).passed;
            record.total_w = Some(o.power.total_w);
            record.transmit_w = Some(o.power.transmit_w);
            record.compute_w = Some(o.power.compute_w);
            record.task_count = Some(o.support.len());
            if !passed {
                record.status = TrialStatus::Invalid;
            }
            None
        }),
    };
    match outcome {
        Ok(Some(result)) => {
            record.total_w = Some(result.power.total_w);
            record.transmit_w = Some(result.power.transmit_w);
            record.compute_w = Some(result.power.compute_w);
            record.task_count = Some(result.selection.len());
            record.iterations = result.iterations();
            if result.status != PipelineStatus::Ok {
                record.status = TrialStatus::Invalid;
            }
            trace = result.stage1.and_then(|s| s.trace);
        }
        Ok(None) => {}
        Err(e) => {
            log::warn!("seed {seed}, {sinr_db} dB, {method}: {e}");
            if let Some(t) = &trace {
                record.iterations = t.iterations();
            }
            record.status = error_status(&e);
        }
    }
    record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    TrialOutcome { record, trace }
}

/// Runs every method on every (SINR, trial) pair. Trial `j` uses seed
/// `base_seed + j` at every SINR, so methods and SINR levels are compared
/// on identical channels. `sink` sees each record as soon as it is
/// produced; the returned list is in sweep, seed, method order regardless
/// of scheduling.
pub fn run_trials<F>(cfg: &ExperimentConfig, sink: F) -> Result<Vec<TrialOutcome>>
where
    F: Fn(&TrialRecord) + Sync,
{
    cfg.validate()?;
    let exp = &cfg.experiment;
    let nets = exp
        .sinr_sweep_db
        .iter()
        .map(|&db| cfg.network_config(db).map(|n| (db, n)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..nets.len())
        .flat_map(|i| (0..exp.trials as u64).map(move |j| (i, exp.base_seed + j)))
        .collect();
    let shared_topology = (!cfg.network.resample_topology).then(|| generate_topology(exp.base_seed, &nets[0].1));
    let job = |&(i, seed): &(usize, u64)| {
        let (db, net) = &nets[i];
        let topo = match &shared_topology {
            Some(t) => t.clone(),
            None => generate_topology(seed, net),
        };
        let ch = generate_channels(seed, &topo, net);
        exp.methods
            .iter()
            .map(|&m| {
                let out = run_method(m, seed, *db, &ch, net, cfg);
                sink(&out.record);
                out
            })
            .collect::<Vec<_>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_workers(exp.workers))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let nested: Vec<Vec<TrialOutcome>> = pool.install(|| jobs.par_iter().map(job).collect());
    Ok(nested.into_iter().flatten().collect())
}

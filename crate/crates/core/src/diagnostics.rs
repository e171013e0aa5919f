//! Runtime certificates for the proximal reweighted loop: descent of the
//! log-sum objective, sufficient decrease of the surrogate, the
//! displacement bound on the optimality residual and its ergodic `O(1/t)`
//! envelope.
//!
//! Every quantity here is a pure function of iterates or of a recorded
//! [`ConvergenceTrace`], so certificates can be recomputed offline.

use crate::gsbf::ConvergenceTrace;
use crate::netmodel::{
    validate, BeamformingSolution, ChannelRealization, NetworkConfig, TaskSet, Tolerance,
};

/// `sum rho_nk log(1 + p ||v_nk||)`.
pub fn log_sum_objective(sol: &BeamformingSolution, rho: &[f64], p: f64) -> f64 {
    sol.group_norms()
        .iter()
        .zip(rho)
        .map(|(norm, r)| r * (p * norm).ln_1p())
        .sum()
}

/// `sum w_nk ||v_nk|| + (beta/2) ||v - v_prev||^2`, without the indicator
/// of the constraint set.
pub fn surrogate_g(
    v: &BeamformingSolution,
    weights: &[f64],
    v_prev: &BeamformingSolution,
    beta: f64,
) -> f64 {
    let linear: f64 = v.group_norms().iter().zip(weights).map(|(n, w)| w * n).sum();
    linear + 0.5 * beta * v.distance(v_prev).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateValue {
    pub value: f64,
    /// Whether `v` passed constraint validation; the surrogate is `+inf`
    /// outside the constraint set, which is flagged here instead.
    pub feasible: bool,
}

pub fn surrogate_g_checked(
    v: &BeamformingSolution,
    weights: &[f64],
    v_prev: &BeamformingSolution,
    beta: f64,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    tol: &Tolerance,
) -> SurrogateValue {
    let full = TaskSet::full(cfg.dims());
    SurrogateValue {
        value: surrogate_g(v, weights, v_prev, beta),
        feasible: validate(v, &full, ch, cfg, tol).passed,
    }
}

/// `G(v_prev; v_prev) - G(v_next; v_prev)`.
pub fn model_reduction(
    v_prev: &BeamformingSolution,
    v_next: &BeamformingSolution,
    weights: &[f64],
    beta: f64,
) -> f64 {
    let linear: f64 = v_prev
        .group_norms()
        .iter()
        .zip(v_next.group_norms())
        .zip(weights)
        .map(|((a, b), w)| w * (a - b))
        .sum();
    linear - 0.5 * beta * v_prev.distance(v_next).powi(2)
}

/// Constants of the residual bound: `kappa = max rho`, `p`, `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateParams {
    pub kappa: f64,
    pub p: f64,
    pub beta: f64,
}

impl CertificateParams {
    pub fn new(rho: &[f64], p: f64, beta: f64) -> Self {
        CertificateParams {
            kappa: rho.iter().copied().fold(0.0, f64::max),
            p,
            beta,
        }
    }

    /// `beta^2 + 2 beta kappa p^2 + kappa^2 p^4`.
    pub fn residual_coefficient(&self) -> f64 {
        let (b, k, p2) = (self.beta, self.kappa, self.p * self.p);
        b * b + 2.0 * b * k * p2 + k * k * p2 * p2
    }

    /// `(2 / beta) * residual_coefficient()`.
    pub fn envelope_coefficient(&self) -> f64 {
        2.0 / self.beta * self.residual_coefficient()
    }
}

pub fn residual_bound_from_displacement(displacement: f64, params: &CertificateParams) -> f64 {
    params.residual_coefficient().sqrt() * displacement
}

/// Upper bound on the optimality residual at `v_next`.
pub fn residual_bound(
    v_prev: &BeamformingSolution,
    v_next: &BeamformingSolution,
    params: &CertificateParams,
) -> f64 {
    residual_bound_from_displacement(v_prev.distance(v_next), params)
}

/// Ergodic rate check: `min_{i <= t} r_i^2` against
/// `(2/beta) C (J(v0) - J_final) / t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCertificate {
    /// Index `t - 1` holds the running minimum over the first `t` iterations.
    pub running_min_sq: Vec<f64>,
    pub envelope: Vec<f64>,
    pub j_initial: f64,
    pub j_final: f64,
}

impl RateCertificate {
    /// First `t` (1-based) where the running minimum exceeds the envelope.
    pub fn first_violation(&self) -> Option<usize> {
        self.running_min_sq
            .iter()
            .zip(&self.envelope)
            .position(|(m, e)| m > e)
            .map(|i| i + 1)
    }

    pub fn holds(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn running_min_nonincreasing(&self) -> bool {
        self.running_min_sq.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn rate_certificate(trace: &ConvergenceTrace, params: &CertificateParams) -> RateCertificate {
    let j_initial = trace.initial_omega;
    let j_final = trace.final_omega();
    let gap = j_initial - j_final;
    let coeff = params.envelope_coefficient();
    let mut running = f64::INFINITY;
    let mut running_min_sq = Vec::with_capacity(trace.records.len());
    let mut envelope = Vec::with_capacity(trace.records.len());
    for (i, rec) in trace.records.iter().enumerate() {
        let r = residual_bound_from_displacement(rec.displacement, params);
        running = running.min(r * r);
        running_min_sq.push(running);
        envelope.push(coeff * gap / (i + 1) as f64);
    }
    RateCertificate {
        running_min_sq,
        envelope,
        j_initial,
        j_final,
    }
}

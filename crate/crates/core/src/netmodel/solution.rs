use super::{ChannelRealization, Complex, Dims, NetworkConfig, Task, TaskSet, DEFAULT_ZERO_TOL};
use crate::error::{Error, Result};

/// Grouped complex beamformer with its group norms and support.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    dims: Dims,
    v: Vec<Complex>,
    group_norms: Vec<f64>,
    support: TaskSet,
    zero_tol: f64,
}

impl BeamformingSolution {
    pub fn new(dims: Dims, v: Vec<Complex>, zero_tol: f64) -> Result<Self> {
        if v.len() != dims.total_len() {
            return Err(Error::DimensionMismatch {
                what: "beamformer",
                expected: dims.total_len(),
                found: v.len(),
            });
        }
        let group_norms: Vec<f64> = (0..dims.num_groups())
            .map(|g| norm(&v[dims.group_range(g)]))
            .collect();
        let support = group_norms
            .iter()
            .enumerate()
            .filter(|(_, n)| **n > zero_tol)
            .map(|(g, _)| dims.task(g))
            .collect();
        Ok(BeamformingSolution {
            dims,
            v,
            group_norms,
            support,
            zero_tol,
        })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self::new(dims, vec![Complex::new(0.0, 0.0); dims.total_len()], DEFAULT_ZERO_TOL)
            .expect("length matches dims")
    }

    /// Same vector, support recomputed at a different threshold.
    pub fn with_zero_tol(self, zero_tol: f64) -> Self {
        Self::new(self.dims, self.v, zero_tol).expect("length unchanged")
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.v
    }

    pub fn group(&self, task: Task) -> &[Complex] {
        &self.v[self.dims.group_range(self.dims.group_index(task))]
    }

    pub fn group_norms(&self) -> &[f64] {
        &self.group_norms
    }

    pub fn group_norm(&self, task: Task) -> f64 {
        self.group_norms[self.dims.group_index(task)]
    }

    pub fn support(&self) -> &TaskSet {
        &self.support
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    /// Aggregated beamformer of user `k`, `v_k = [v_1k; ..; v_Nk]`.
    pub fn aggregated(&self, user: usize) -> Vec<Complex> {
        (0..self.dims.num_bs)
            .flat_map(|n| self.group(Task::new(n, user)).iter().copied())
            .collect()
    }

    /// `sum_k ||v_nk||^2` for BS `n`.
    pub fn bs_power(&self, bs: usize) -> f64 {
        (0..self.dims.num_users)
            .map(|k| self.group_norm(Task::new(bs, k)).powi(2))
            .sum()
    }

    /// Euclidean distance to another beamformer of the same shape.
    pub fn distance(&self, other: &BeamformingSolution) -> f64 {
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.v.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn norm(z: &[Complex]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `h^H v`.
pub(crate) fn inner(h: &[Complex], v: &[Complex]) -> Complex {
    h.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn check_shapes(sol: &BeamformingSolution, ch: &ChannelRealization, cfg: &NetworkConfig) -> Result<()> {
    let dims = cfg.dims();
    for (what, d) in [("beamformer", sol.dims()), ("channel", ch.dims())] {
        if d != dims {
            return Err(Error::DimensionMismatch {
                what,
                expected: dims.total_len(),
                found: d.total_len(),
            });
        }
    }
    Ok(())
}

/// Per-user SINR using aggregated channels and beamformers.
pub fn sinr_per_user(
    sol: &BeamformingSolution,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<Vec<f64>> {
    check_shapes(sol, ch, cfg)?;
    let k_users = cfg.num_users;
    let beams: Vec<Vec<Complex>> = (0..k_users).map(|l| sol.aggregated(l)).collect();
    Ok((0..k_users)
        .map(|k| {
            let hk = ch.aggregated(k);
            let signal = inner(&hk, &beams[k]).norm_sqr();
            let interference: f64 = (0..k_users)
                .filter(|l| *l != k)
                .map(|l| inner(&hk, &beams[l]).norm_sqr())
                .sum();
            signal / (interference + cfg.noise_power[k])
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerBreakdown {
    pub transmit_w: f64,
    pub compute_w: f64,
    pub total_w: f64,
}

/// Transmit power `sum ||v_nk||^2 / eta_n` plus compute power of the
/// selected tasks.
pub fn power_breakdown(
    sol: &BeamformingSolution,
    selection: &TaskSet,
    cfg: &NetworkConfig,
) -> Result<PowerBreakdown> {
    let dims = cfg.dims();
    if sol.dims() != dims {
        return Err(Error::DimensionMismatch {
            what: "beamformer",
            expected: dims.total_len(),
            found: sol.dims().total_len(),
        });
    }
    let mut transmit_w = 0.0;
    for task in dims.tasks() {
        let norm = sol.group_norm(task);
        if !selection.contains(task) && norm > sol.zero_tol() {
            return Err(Error::SelectionMismatch { task, norm });
        }
        transmit_w += norm * norm / cfg.eta[task.bs];
    }
    let compute_w: f64 = selection.iter().map(|t| cfg.p_compute(t)).sum();
    Ok(PowerBreakdown {
        transmit_w,
        compute_w,
        total_w: transmit_w + compute_w,
    })
}

/// Acceptance thresholds for [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative SINR shortfall, `(gamma - sinr) / gamma`.
    pub sinr_rel: f64,
    /// Absolute per-BS power excess in watts.
    pub power_abs: f64,
    /// Absolute norm allowed on groups outside the selection.
    pub zero_abs: f64,
}

impl Tolerance {
    pub fn uniform(tol: f64) -> Self {
        Tolerance {
            sinr_rel: tol,
            power_abs: tol,
            zero_abs: DEFAULT_ZERO_TOL.max(tol),
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            sinr_rel: 1e-5,
            power_abs: 1e-7,
            zero_abs: DEFAULT_ZERO_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub sinr: Vec<f64>,
    pub worst_sinr_shortfall: f64,
    pub worst_power_violation: f64,
    pub worst_zero_block: f64,
    pub passed: bool,
}

/// Checks SINR targets, per-BS budgets and zero blocks outside `selection`.
/// Shape errors are reported as a failed check rather than an error.
pub fn validate(
    sol: &BeamformingSolution,
    selection: &TaskSet,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    tol: &Tolerance,
) -> ConstraintReport {
    let Ok(sinr) = sinr_per_user(sol, ch, cfg) else {
        return ConstraintReport {
            sinr: Vec::new(),
            worst_sinr_shortfall: f64::INFINITY,
            worst_power_violation: f64::INFINITY,
            worst_zero_block: f64::INFINITY,
            passed: false,
        };
    };
    let worst_sinr_shortfall = sinr
        .iter()
        .zip(&cfg.gamma)
        .map(|(s, g)| ((g - s) / g).max(0.0))
        .fold(0.0, f64::max);
    let worst_power_violation = (0..cfg.num_bs)
        .map(|n| (sol.bs_power(n) - cfg.p_max[n]).max(0.0))
        .fold(0.0, f64::max);
    let worst_zero_block = cfg
        .dims()
        .tasks()
        .filter(|t| !selection.contains(*t))
        .map(|t| sol.group_norm(t))
        .fold(0.0, f64::max);
    let passed = worst_sinr_shortfall <= tol.sinr_rel
        && worst_power_violation <= tol.power_abs
        && worst_zero_block <= tol.zero_abs;
    ConstraintReport {
        sinr,
        worst_sinr_shortfall,
        worst_power_violation,
        worst_zero_block,
        passed,
    }
}

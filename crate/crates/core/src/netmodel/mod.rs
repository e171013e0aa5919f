//! Physical system model: network configuration, placement, channels, and
//! the power/SINR evaluation used to check candidate beamformers.
//!
//! Indices are zero-based throughout. Beamformer groups are ordered BS-major,
//! `g = n * K + k`, which is the order of the aggregated vector
//! `[v_11, .., v_1K, .., v_N1, .., v_NK]`.

mod channel;
mod solution;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use channel::{
    generate_channels, generate_channels_with, generate_topology, path_loss_db, ChannelRealization,
    Fading, Topology, MIN_DISTANCE_KM, PATH_LOSS_INTERCEPT_DB, PATH_LOSS_SLOPE_DB,
};
pub use solution::{
    power_breakdown, sinr_per_user, validate, BeamformingSolution, ConstraintReport,
    PowerBreakdown, Tolerance,
};

pub type Complex = num_complex::Complex64;

/// Default absolute threshold on group norms for support detection.
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

/// Inference task `(n, k)`: BS `n` runs the model for user `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Task {
    pub bs: usize,
    pub user: usize,
}

impl Task {
    pub fn new(bs: usize, user: usize) -> Self {
        Task { bs, user }
    }
}

/// Problem dimensions `(N, K, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub num_bs: usize,
    pub num_users: usize,
    pub antennas: usize,
}

impl Dims {
    pub fn new(num_bs: usize, num_users: usize, antennas: usize) -> Self {
        Dims {
            num_bs,
            num_users,
            antennas,
        }
    }

    pub fn num_groups(&self) -> usize {
        self.num_bs * self.num_users
    }

    /// Length of the aggregated complex beamformer.
    pub fn total_len(&self) -> usize {
        self.num_groups() * self.antennas
    }

    pub fn group_index(&self, task: Task) -> usize {
        task.bs * self.num_users + task.user
    }

    pub fn task(&self, group: usize) -> Task {
        Task::new(group / self.num_users, group % self.num_users)
    }

    pub fn group_range(&self, group: usize) -> std::ops::Range<usize> {
        group * self.antennas..(group + 1) * self.antennas
    }

    pub fn tasks(&self) -> impl Iterator<Item = Task> + '_ {
        (0..self.num_groups()).map(move |g| self.task(g))
    }
}

/// How channel amplitudes are scaled relative to the noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelScale {
    /// Path loss measured relative to its 1 km intercept, so gains are
    /// order one at 1 km. Pairs with unit noise power.
    #[default]
    Normalized,
    /// Absolute `128.1 + 37.6 log10(d)` dB path loss. Pairs with a physical
    /// noise power such as 1e-13 W.
    PathLossDb,
}

impl ChannelScale {
    pub fn default_noise_power(&self) -> f64 {
        match self {
            ChannelScale::Normalized => 1.0,
            ChannelScale::PathLossDb => 1e-13,
        }
    }
}

/// Static problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub num_bs: usize,
    pub num_users: usize,
    pub antennas: usize,
    /// Per-BS transmit power budget in watts.
    pub p_max: Vec<f64>,
    /// Per-BS power amplifier efficiency in (0, 1].
    pub eta: Vec<f64>,
    /// Compute power of task `(n, k)` in watts, row-major `N x K`.
    pub p_compute: Vec<f64>,
    /// Per-user target SINR, linear scale.
    pub gamma: Vec<f64>,
    /// Per-user noise variance in watts.
    pub noise_power: Vec<f64>,
    pub region_half_width_km: f64,
    pub channel_scale: ChannelScale,
}

impl NetworkConfig {
    /// Homogeneous network with the reference constants: `P_max = 1 W`,
    /// `eta = 0.25`, `P^c = 0.45 W`, 0 dB targets, half-width 0.5 km and
    /// normalized channels with unit noise.
    pub fn homogeneous(num_bs: usize, num_users: usize, antennas: usize) -> Self {
        NetworkConfig {
            num_bs,
            num_users,
            antennas,
            p_max: vec![1.0; num_bs],
            eta: vec![0.25; num_bs],
            p_compute: vec![0.45; num_bs * num_users],
            gamma: vec![1.0; num_users],
            noise_power: vec![1.0; num_users],
            region_half_width_km: 0.5,
            channel_scale: ChannelScale::Normalized,
        }
    }

    /// Eight 2-antenna BSs serving fifteen users.
    pub fn reference() -> Self {
        Self::homogeneous(8, 15, 2)
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.num_bs, self.num_users, self.antennas)
    }

    pub fn p_compute(&self, task: Task) -> f64 {
        self.p_compute[task.bs * self.num_users + task.user]
    }

    /// Sets every user's target SINR from a dB value.
    pub fn with_sinr_db(mut self, sinr_db: f64) -> Self {
        self.gamma = vec![db_to_linear(sinr_db); self.num_users];
        self
    }

    pub fn with_uniform_compute(mut self, p_compute: f64) -> Self {
        self.p_compute = vec![p_compute; self.num_bs * self.num_users];
        self
    }

    pub fn with_uniform_p_max(mut self, p_max: f64) -> Self {
        self.p_max = vec![p_max; self.num_bs];
        self
    }

    pub fn with_channel_scale(mut self, scale: ChannelScale) -> Self {
        self.channel_scale = scale;
        self.noise_power = vec![scale.default_noise_power(); self.num_users];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_bs == 0 || self.num_users == 0 || self.antennas == 0 {
            return Err(Error::InvalidConfig(
                "num_bs, num_users and antennas must be positive".into(),
            ));
        }
        check_len("p_max", self.num_bs, self.p_max.len())?;
        check_len("eta", self.num_bs, self.eta.len())?;
        check_len("p_compute", self.num_bs * self.num_users, self.p_compute.len())?;
        check_len("gamma", self.num_users, self.gamma.len())?;
        check_len("noise_power", self.num_users, self.noise_power.len())?;
        let positive = |name: &str, xs: &[f64]| {
            if xs.iter().all(|x| x.is_finite() && *x > 0.0) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} entries must be finite and positive"
                )))
            }
        };
        positive("p_max", &self.p_max)?;
        positive("eta", &self.eta)?;
        positive("gamma", &self.gamma)?;
        positive("noise_power", &self.noise_power)?;
        if self.eta.iter().any(|e| *e > 1.0) {
            return Err(Error::InvalidConfig("eta entries must lie in (0, 1]".into()));
        }
        if self.p_compute.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig(
                "p_compute entries must be finite and nonnegative".into(),
            ));
        }
        if !(self.region_half_width_km.is_finite() && self.region_half_width_km > 0.0) {
            return Err(Error::InvalidConfig(
                "region_half_width_km must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// A set of tasks, i.e. a candidate support of the grouped beamformer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskSet(BTreeSet<Task>);

impl TaskSet {
    pub fn new() -> Self {
        TaskSet(BTreeSet::new())
    }

    pub fn full(dims: Dims) -> Self {
        dims.tasks().collect()
    }

    pub fn insert(&mut self, task: Task) -> bool {
        self.0.insert(task)
    }

    pub fn contains(&self, task: Task) -> bool {
        self.0.contains(&task)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Task> + '_ {
        self.0.iter().copied()
    }

    pub fn complement(&self, dims: Dims) -> TaskSet {
        dims.tasks().filter(|t| !self.contains(*t)).collect()
    }

    /// True when every user is served by at least one task in the set.
    pub fn covers_all_users(&self, dims: Dims) -> bool {
        let mut covered = vec![false; dims.num_users];
        for t in self.iter() {
            covered[t.user] = true;
        }
        covered.into_iter().all(|c| c)
    }

    /// Users served by each BS, `A_n`.
    pub fn per_bs(&self, dims: Dims) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); dims.num_bs];
        for t in self.iter() {
            sets[t.bs].push(t.user);
        }
        sets
    }
}

impl FromIterator<Task> for TaskSet {
    fn from_iter<I: IntoIterator<Item = Task>>(iter: I) -> Self {
        TaskSet(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_index_roundtrip() {
        let d = Dims::new(3, 4, 2);
        for g in 0..d.num_groups() {
            assert_eq!(d.group_index(d.task(g)), g);
        }
        assert_eq!(d.group_index(Task::new(1, 0)), 4);
        assert_eq!(d.group_range(5), 10..12);
    }

    #[test]
    fn reference_config_is_valid() {
        let cfg = NetworkConfig::reference();
        cfg.validate().unwrap();
        assert_eq!(cfg.dims().num_groups(), 120);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = NetworkConfig::homogeneous(2, 2, 1);
        cfg.eta[0] = 1.5;
        assert!(cfg.validate().is_err());

        let mut cfg = NetworkConfig::homogeneous(2, 2, 1);
        cfg.gamma.pop();
        assert!(matches!(
            cfg.validate(),
            Err(Error::DimensionMismatch { what: "gamma", .. })
        ));

        let mut cfg = NetworkConfig::homogeneous(2, 2, 1);
        cfg.p_compute[1] = 0.0;
        cfg.validate().unwrap();
        cfg.p_compute[1] = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn coverage() {
        let d = Dims::new(2, 2, 1);
        let s: TaskSet = [Task::new(0, 0), Task::new(1, 0)].into_iter().collect();
        assert!(!s.covers_all_users(d));
        assert_eq!(s.complement(d).len(), 2);
        assert_eq!(s.per_bs(d), vec![vec![0], vec![0]]);
        assert!(TaskSet::full(d).covers_all_users(d));
    }

    #[test]
    fn sinr_db_conversion() {
        let cfg = NetworkConfig::homogeneous(1, 2, 1).with_sinr_db(10.0);
        assert!((cfg.gamma[1] - 10.0).abs() < 1e-12);
    }
}

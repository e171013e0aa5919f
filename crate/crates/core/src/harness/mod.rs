//! Seeded Monte Carlo experiments: configuration, trial execution, CSV
//! export and summary tables.

mod export;
mod run;

pub use export::{
    export, format_summary, read_records, summarize, trace_file_name, write_records,
    write_summary, write_trace, SummaryRow, RECORDS_FILE, SUMMARY_FILE, TRACE_DIR,
};
pub use run::{resolve_workers, run_trials, TrialOutcome, TrialRecord, TrialStatus};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsbf::{AlgorithmParams, CutSearch};
use crate::netmodel::{db_to_linear, ChannelScale, NetworkConfig, DEFAULT_ZERO_TOL};
use crate::oracle::MAX_ORACLE_TASKS;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "GSBF_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Logsum,
    MixedL12,
    Cb,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Logsum, Method::MixedL12, Method::Cb, Method::Oracle];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Logsum => "logsum",
            Method::MixedL12 => "mixed_l12",
            Method::Cb => "cb",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method {s:?}, expected one of logsum, mixed_l12, cb, oracle"
                ))
            })
    }
}

/// A scalar applied to every entry, or one value per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    Uniform(f64),
    PerEntry(Vec<f64>),
}

impl Values {
    fn expand(&self, name: &'static str, len: usize) -> Result<Vec<f64>> {
        match self {
            Values::Uniform(x) => Ok(vec![*x; len]),
            Values::PerEntry(xs) if xs.len() == len => Ok(xs.clone()),
            Values::PerEntry(xs) => Err(Error::DimensionMismatch {
                what: name,
                expected: len,
                found: xs.len(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub num_bs: usize,
    pub num_users: usize,
    pub antennas: usize,
    /// Per BS.
    pub p_max: Values,
    /// Per BS.
    pub eta: Values,
    /// Row-major `num_bs x num_users`.
    pub p_compute: Values,
    /// Per user; defaults to the channel scale's noise level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<Values>,
    pub region_half_width_km: f64,
    pub channel_scale: ChannelScale,
    /// Draw a new placement per trial; otherwise the placement of
    /// `base_seed` is shared and only fading changes.
    pub resample_topology: bool,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            num_bs: 8,
            num_users: 15,
            antennas: 2,
            p_max: Values::Uniform(1.0),
            eta: Values::Uniform(0.25),
            p_compute: Values::Uniform(0.45),
            noise_power: None,
            region_half_width_km: 0.5,
            channel_scale: ChannelScale::Normalized,
            resample_topology: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmSection {
    pub p: f64,
    pub beta: f64,
    pub iter_max: usize,
    pub eps: f64,
    pub zero_tol: f64,
    pub solver_tol: f64,
    pub cut_search: CutSearch,
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        let d = AlgorithmParams::default();
        AlgorithmSection {
            p: d.p,
            beta: d.beta,
            iter_max: d.iter_max,
            eps: d.eps,
            zero_tol: DEFAULT_ZERO_TOL,
            solver_tol: d.solver_tol,
            cut_search: d.cut_search,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub sinr_sweep_db: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub output_dir: PathBuf,
    /// Concurrent trials; 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            sinr_sweep_db: vec![0.0, 2.0, 4.0, 6.0, 8.0],
            trials: 20,
            base_seed: 0,
            methods: vec![Method::Logsum, Method::MixedL12, Method::Cb],
            output_dir: PathBuf::from("results"),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSection,
    pub algorithm: AlgorithmSection,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    /// Network at a common target SINR for every user.
    pub fn network_config(&self, sinr_db: f64) -> Result<NetworkConfig> {
        let net = &self.network;
        let (n, k) = (net.num_bs, net.num_users);
        let noise = match &net.noise_power {
            Some(v) => v.expand("noise_power", k)?,
            None => vec![net.channel_scale.default_noise_power(); k],
        };
        let cfg = NetworkConfig {
            num_bs: n,
            num_users: k,
            antennas: net.antennas,
            p_max: net.p_max.expand("p_max", n)?,
            eta: net.eta.expand("eta", n)?,
            p_compute: net.p_compute.expand("p_compute", n * k)?,
            gamma: vec![db_to_linear(sinr_db); k],
            noise_power: noise,
            region_half_width_km: net.region_half_width_km,
            channel_scale: net.channel_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn algorithm_params(&self) -> AlgorithmParams {
        let a = &self.algorithm;
        AlgorithmParams {
            p: a.p,
            beta: a.beta,
            iter_max: a.iter_max,
            eps: a.eps,
            zero_tol: a.zero_tol,
            solver_tol: a.solver_tol,
            cut_search: a.cut_search,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let exp = &self.experiment;
        if exp.sinr_sweep_db.is_empty() {
            return Err(Error::InvalidConfig("sinr_sweep_db must not be empty".into()));
        }
        if let Some(db) = exp.sinr_sweep_db.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidConfig(format!("sinr_sweep_db contains {db}")));
        }
        if exp.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        if exp.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must not be empty".into()));
        }
        let mut seen = exp.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != exp.methods.len() {
            return Err(Error::InvalidConfig("methods contains duplicates".into()));
        }
        let tasks = self.network.num_bs * self.network.num_users;
        if exp.methods.contains(&Method::Oracle) && tasks > MAX_ORACLE_TASKS {
            return Err(Error::SizeGuard {
                tasks,
                limit: MAX_ORACLE_TASKS,
            });
        }
        self.network_config(exp.sinr_sweep_db[0])?;
        self.algorithm_params().validate()
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }
}

/// Reads and validates a TOML experiment file. Missing keys take the
/// defaults; unknown keys are rejected with their line and column.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg = ExperimentConfig::from_toml_str(&text).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate().map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_setup() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let net = cfg.network_config(0.0).unwrap();
        assert_eq!((net.num_bs, net.num_users, net.antennas), (8, 15, 2));
        assert!(net.p_compute.iter().all(|&p| p == 0.45));
        assert!(net.p_max.iter().all(|&p| p == 1.0));
        assert!(net.eta.iter().all(|&e| e == 0.25));
        assert!(net.noise_power.iter().all(|&s| s == 1.0));
        let a = cfg.algorithm_params();
        assert_eq!((a.p, a.beta, a.iter_max, a.eps), (100.0, 0.1, 25, 1e-5));
        assert_eq!(cfg.experiment.trials, 20);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let err = ExperimentConfig::from_toml_str("[network]\nnum_bs = 2\nfoo = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("foo"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
        assert!(ExperimentConfig::from_toml_str("foo = 1").is_err());
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.network.num_bs = 2;
        cfg.network.num_users = 3;
        cfg.network.p_compute = Values::PerEntry(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        cfg.network.noise_power = Some(Values::Uniform(2.5));
        cfg.network.channel_scale = ChannelScale::PathLossDb;
        cfg.algorithm.cut_search = CutSearch::Bisection;
        cfg.experiment.methods = vec![Method::Cb, Method::Oracle];
        cfg.experiment.base_seed = 17;
        let text = cfg.to_toml_string();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn per_entry_lengths_checked() {
        let cfg = ExperimentConfig::from_toml_str("[network]\nnum_bs = 2\nnum_users = 2\np_max = [1.0]\n")
            .unwrap();
        assert!(matches!(
            cfg.network_config(0.0),
            Err(Error::DimensionMismatch { what: "p_max", .. })
        ));
    }

    #[test]
    fn integers_accepted_for_reals() {
        let cfg = ExperimentConfig::from_toml_str("[network]\np_max = 2\n[experiment]\nsinr_sweep_db = [0, 4]\n")
            .unwrap();
        assert_eq!(cfg.network.p_max, Values::Uniform(2.0));
        assert_eq!(cfg.experiment.sinr_sweep_db, vec![0.0, 4.0]);
    }

    #[test]
    fn invariants() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.methods.push(Method::Oracle);
        assert!(matches!(cfg.validate(), Err(Error::SizeGuard { tasks: 120, .. })));
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.sinr_sweep_db.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.methods = vec![Method::Cb, Method::Cb];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("greedy".parse::<Method>().is_err());
    }

    #[test]
    fn sweep_sets_linear_gamma() {
        let cfg = ExperimentConfig::default().network_config(10.0).unwrap();
        assert!(cfg.gamma.iter().all(|g| (g - 10.0).abs() < 1e-12));
    }
}

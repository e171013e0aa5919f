//! Joint inference-task selection and downlink beamforming for cooperative
//! edge inference, minimizing computation plus transmit power.
pub mod conic;
pub mod diagnostics;
pub mod error;
pub mod gsbf;
pub mod harness;
pub mod netmodel;
pub mod oracle;

pub use error::{Error, Result, Stage};
pub use gsbf::{
    run_cb, run_mixed_l12, run_three_stage, AlgorithmParams, ConvergenceTrace, CutSearch,
    PipelineResult, TaskSelection,
};
pub use harness::{ExperimentConfig, Method, TrialRecord};
pub use netmodel::{BeamformingSolution, ChannelRealization, NetworkConfig, Task, TaskSet};
pub use oracle::{oracle_min_power, OracleResult};

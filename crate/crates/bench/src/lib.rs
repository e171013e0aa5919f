//! Seeded instances shared by the benchmarks.

use gsbf_core::netmodel::{generate_channels, generate_topology};
use gsbf_core::{ChannelRealization, NetworkConfig};

/// Homogeneous network at a common target SINR with seeded placement and fading.
pub fn instance(num_bs: usize, num_users: usize, antennas: usize, sinr_db: f64, seed: u64) -> (NetworkConfig, ChannelRealization) {
    let cfg = NetworkConfig::homogeneous(num_bs, num_users, antennas).with_sinr_db(sinr_db);
    let ch = generate_channels(seed, &generate_topology(seed, &cfg), &cfg);
    (cfg, ch)
}

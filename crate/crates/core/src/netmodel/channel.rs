use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ChannelScale, Complex, Dims, NetworkConfig};
use crate::error::{Error, Result};

pub const PATH_LOSS_INTERCEPT_DB: f64 = 128.1;
pub const PATH_LOSS_SLOPE_DB: f64 = 37.6;

/// Distances below 1 m are clamped before evaluating the path loss.
pub const MIN_DISTANCE_KM: f64 = 1e-3;

const TOPOLOGY_STREAM: u64 = 0;
const FADING_STREAM: u64 = 1;

/// Log-distance path loss in dB for a distance in km.
pub fn path_loss_db(d_km: f64) -> Result<f64> {
    if !(d_km > 0.0) || !d_km.is_finite() {
        return Err(Error::Domain(format!(
            "path loss needs a positive distance, got {d_km}"
        )));
    }
    Ok(PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * d_km.log10())
}

/// BS and user positions in km.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub bs_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
}

impl Topology {
    pub fn distance_km(&self, bs: usize, user: usize) -> f64 {
        let [bx, by] = self.bs_positions[bs];
        let [ux, uy] = self.user_positions[user];
        (bx - ux).hypot(by - uy)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Places BSs and users i.i.d. uniformly over `[-w, w]^2`.
pub fn generate_topology(seed: u64, cfg: &NetworkConfig) -> Topology {
    let w = cfg.region_half_width_km;
    let mut rng = rng_for(seed, TOPOLOGY_STREAM);
    let point = |rng: &mut ChaCha8Rng| [rng.random_range(-w..=w), rng.random_range(-w..=w)];
    let bs_positions = (0..cfg.num_bs).map(|_| point(&mut rng)).collect();
    let user_positions = (0..cfg.num_users).map(|_| point(&mut rng)).collect();
    Topology {
        bs_positions,
        user_positions,
    }
}

/// Small-scale fading model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fading {
    /// `xi ~ CN(0, I)`.
    #[default]
    Rayleigh,
    /// `xi = 1`; leaves only the large-scale amplitude.
    Unit,
}

/// Channel vectors `h_nk` stored BS-major, `L` entries per `(n, k)` block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    dims: Dims,
    h: Vec<Complex>,
}

impl ChannelRealization {
    pub fn from_blocks(dims: Dims, h: Vec<Complex>) -> Result<Self> {
        if h.len() != dims.total_len() {
            return Err(Error::DimensionMismatch {
                what: "channel",
                expected: dims.total_len(),
                found: h.len(),
            });
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("channel entries must be finite".into()));
        }
        Ok(ChannelRealization { dims, h })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn block(&self, bs: usize, user: usize) -> &[Complex] {
        let g = bs * self.dims.num_users + user;
        &self.h[self.dims.group_range(g)]
    }

    /// `||h_nk||^2`.
    pub fn gain_sq(&self, bs: usize, user: usize) -> f64 {
        self.block(bs, user).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Aggregated channel `h_k = [h_1k; ..; h_Nk]` of length `N L`.
    pub fn aggregated(&self, user: usize) -> Vec<Complex> {
        (0..self.dims.num_bs)
            .flat_map(|n| self.block(n, user).iter().copied())
            .collect()
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        ChannelRealization {
            dims: self.dims,
            h: self.h.iter().map(|z| z * factor).collect(),
        }
    }
}

/// Rayleigh-faded channels over the given placement.
pub fn generate_channels(seed: u64, topo: &Topology, cfg: &NetworkConfig) -> ChannelRealization {
    generate_channels_with(seed, topo, cfg, Fading::Rayleigh)
}

pub fn generate_channels_with(
    seed: u64,
    topo: &Topology,
    cfg: &NetworkConfig,
    fading: Fading,
) -> ChannelRealization {
    let dims = cfg.dims();
    let mut rng = rng_for(seed, FADING_STREAM);
    let reference_db = match cfg.channel_scale {
        ChannelScale::Normalized => PATH_LOSS_INTERCEPT_DB,
        ChannelScale::PathLossDb => 0.0,
    };
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = Vec::with_capacity(dims.total_len());
    for n in 0..dims.num_bs {
        for k in 0..dims.num_users {
            let d = topo.distance_km(n, k).max(MIN_DISTANCE_KM);
            let loss = path_loss_db(d).expect("clamped distance is positive") - reference_db;
            let amplitude = 10f64.powf(-loss / 20.0);
            for _ in 0..dims.antennas {
                let xi = match fading {
                    Fading::Rayleigh => {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(re * half, im * half)
                    }
                    Fading::Unit => Complex::new(1.0, 0.0),
                };
                h.push(xi * amplitude);
            }
        }
    }
    ChannelRealization { dims, h }
}

use crate::netmodel::{ChannelRealization, Complex, Dims};

/// Real rows of `h_nk^H v` for every `(n, k)` block.
///
/// For `h = a + ib` and `v = x + iy` (interleaved `[x_1, y_1, x_2, y_2, ..]`),
/// `Re(h^H v) = a.x + b.y` and `Im(h^H v) = a.y - b.x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealChannel {
    dims: Dims,
    re: Vec<f64>,
    im: Vec<f64>,
}

pub fn realify(ch: &ChannelRealization) -> RealChannel {
    let dims = ch.dims();
    let mut re = Vec::with_capacity(2 * dims.total_len());
    let mut im = Vec::with_capacity(2 * dims.total_len());
    for n in 0..dims.num_bs {
        for k in 0..dims.num_users {
            for h in ch.block(n, k) {
                re.extend([h.re, h.im]);
                im.extend([-h.im, h.re]);
            }
        }
    }
    RealChannel { dims, re, im }
}

impl RealChannel {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Coefficients of `Re(h_nk^H v)` and `Im(h_nk^H v)` over the `2L` real
    /// coordinates of a block `v`.
    pub fn rows(&self, bs: usize, user: usize) -> (&[f64], &[f64]) {
        let g = bs * self.dims.num_users + user;
        let w = 2 * self.dims.antennas;
        (&self.re[g * w..(g + 1) * w], &self.im[g * w..(g + 1) * w])
    }

    /// `(Re, Im)` of `h_k^H v` for an aggregated real beamformer `v` of length `2NL`.
    pub fn inner_product(&self, user: usize, v: &[f64]) -> (f64, f64) {
        let w = 2 * self.dims.antennas;
        (0..self.dims.num_bs).fold((0.0, 0.0), |(r, i), n| {
            let (re, im) = self.rows(n, user);
            let block = &v[n * w..(n + 1) * w];
            (r + dot(re, block), i + dot(im, block))
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn to_real(v: &[Complex]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn to_complex(x: &[f64]) -> Vec<Complex> {
    x.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
}

//! Discrete Dolbeault calculus on the complex 2-torus X = ℂ²/(ℤ²+iℤ²),
//! sampled on a periodic 4D grid: pseudo-spectral derivatives, a constructive
//! family of non-Kähler Gauduchon metrics, global quadrature normalized to
//! vol(X) = 2π, and the second-order operator P = iΛ∂̄∂.

pub mod calculus;
pub mod fft;
pub mod field;
pub mod metric;

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
pub use calculus::*;
pub use fft::{Deriv, Spectral};
pub use field::FormField;
pub use metric::{MetricFamily, MetricField, ProfileMode};

/// Periodic grid over the fundamental domain [0,1)⁴ in (x¹, y¹, x², y²).
pub struct Grid {
    dims: [usize; 4],
    spectral: Spectral,
}

pub type GridRef = Arc<Grid>;

impl Grid {
    pub fn new(dims: [usize; 4]) -> Result<GridRef> {
        for &n in &dims {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis length {n} must be a power of two >= 8"
                )));
            }
        }
        Ok(Arc::new(Grid { dims, spectral: Spectral::new(dims) }))
    }

    pub fn cubic(n: usize) -> Result<GridRef> {
        Grid::new([n; 4])
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn total(&self) -> usize {
        self.spectral.total()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Smallest grid spacing.
    pub fn h_min(&self) -> f64 {
        1.0 / self.dims.iter().copied().max().unwrap() as f64
    }

    /// Real coordinates (x¹, y¹, x², y²) of a node.
    pub fn coords(&self, idx: usize) -> [f64; 4] {
        let mut rem = idx;
        let mut out = [0.0; 4];
        for a in (0..4).rev() {
            out[a] = (rem % self.dims[a]) as f64 / self.dims[a] as f64;
            rem /= self.dims[a];
        }
        out
    }

    pub fn index(&self, node: [usize; 4]) -> usize {
        ((node[0] * self.dims[1] + node[1]) * self.dims[2] + node[2]) * self.dims[3] + node[3]
    }

    /// Scrambled spectrum index of an integer mode (components taken mod N).
    pub fn index_of_mode(&self, k: [i64; 4]) -> usize {
        let mut idx = 0usize;
        for a in 0..4 {
            let n = self.dims[a] as i64;
            let nat = k[a].rem_euclid(n) as usize;
            // bit reversal is an involution
            let bits = self.dims[a].trailing_zeros();
            let rev = (nat.reverse_bits() >> (usize::BITS - bits)) & (self.dims[a] - 1);
            idx = idx * self.dims[a] + rev;
        }
        idx
    }

    /// Zero complex field.
    pub fn zeros(&self) -> Vec<C64> {
        vec![C64::default(); self.total()]
    }

    /// Constant complex field.
    pub fn constant(&self, v: C64) -> Vec<C64> {
        vec![v; self.total()]
    }

    /// Evaluate a closure of the coordinates at every node.
    pub fn sample(&self, f: impl Fn([f64; 4]) -> C64 + Sync) -> Vec<C64> {
        let mut out = self.zeros();
        let dims = self.dims;
        crate::par::for_each_chunk_mut(&mut out, 4096, |ci, chunk| {
            let base = ci * 4096;
            for (o, v) in chunk.iter_mut().enumerate() {
                let idx = base + o;
                let mut rem = idx;
                let mut x = [0.0; 4];
                for a in (0..4).rev() {
                    x[a] = (rem % dims[a]) as f64 / dims[a] as f64;
                    rem /= dims[a];
                }
                *v = f(x);
            }
        });
        out
    }

    /// Random band-limited complex field: independent uniform coefficients
    /// on all modes with |k_a| ≤ band, then inverse transform.
    pub fn random_band_limited(&self, band: i64, amplitude: f64, rng: &mut impl Rng) -> Vec<C64> {
        let mut spec = self.zeros();
        let mut modes = 0usize;
        let mut entries = Vec::new();
        self.for_modes_in_band(band, |idx| {
            entries.push(idx);
            modes += 1;
        });
        for idx in entries {
            spec[idx] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let scale = amplitude / (modes as f64).sqrt();
        for v in &mut spec {
            *v *= scale * self.total() as f64;
        }
        self.spectral.inverse_inplace(&mut spec);
        spec
    }

    /// Random band-limited real field (real part of a band-limited field).
    pub fn random_band_limited_real(
        &self,
        band: i64,
        amplitude: f64,
        rng: &mut impl Rng,
    ) -> Vec<C64> {
        let f = self.random_band_limited(band, amplitude, rng);
        f.iter().map(|v| C64::new(v.re, 0.0)).collect()
    }

    fn for_modes_in_band(&self, band: i64, mut f: impl FnMut(usize)) {
        let b = band;
        for k0 in -b..=b {
            for k1 in -b..=b {
                for k2 in -b..=b {
                    for k3 in -b..=b {
                        // modes must stay strictly below Nyquist
                        if [k0, k1, k2, k3]
                            .iter()
                            .zip(&self.dims)
                            .any(|(&k, &n)| 2 * k.unsigned_abs() as usize >= n)
                        {
                            continue;
                        }
                        f(self.index_of_mode([k0, k1, k2, k3]));
                    }
                }
            }
        }
    }
}

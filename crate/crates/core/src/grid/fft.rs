//! Pseudo-spectral engine: 4D FFTs on the periodic grid and Fourier-side
//! derivative multipliers.
//!
//! Layout is row-major over the four real axes `(x¹, y¹, x², y²)`; the complex
//! coordinates are `z¹ = x¹ + iy¹`, `z² = x² + iy²` and the fundamental domain
//! is `[0,1)⁴`, so a mode `k` carries the phase `e^{2πi k·x}`.
//!
//! Transforms run as two fused axis-pair passes over L1-resident tiles with
//! split re/im scratch, decimation-in-frequency forward and
//! decimation-in-time inverse. No bit-reversal is ever applied: spectra live
//! in bit-reversed order along every axis, and the derivative multiplier
//! tables are built in the same scrambled order. The batch entry points
//! transform many scalar planes inside a single parallel region, which is
//! what keeps both cores busy during a flow step.
//!
//! Grid axes are restricted to powers of two; first-derivative multipliers
//! zero the Nyquist mode on each axis.

use std::cell::RefCell;

use num_complex::Complex64 as C64;

use crate::par;

/// Derivative directions in the complex coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deriv {
    /// ∂/∂z¹ = ½(∂x¹ − i ∂y¹)
    Dz1,
    /// ∂/∂z² = ½(∂x² − i ∂y²)
    Dz2,
    /// ∂/∂z̄¹ = ½(∂x¹ + i ∂y¹)
    Dzb1,
    /// ∂/∂z̄² = ½(∂x² + i ∂y²)
    Dzb2,
}

pub const HOLO_DERIVS: [Deriv; 2] = [Deriv::Dz1, Deriv::Dz2];
pub const ANTIHOLO_DERIVS: [Deriv; 2] = [Deriv::Dzb1, Deriv::Dzb2];

/// Lines per tile; butterflies vectorize across this lane dimension.
const LANES: usize = 16;

fn wavenumbers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if 2 * i < n {
                i as f64
            } else if 2 * i == n {
                0.0 // Nyquist
            } else {
                i as f64 - n as f64
            }
        })
        .collect()
}

fn bit_reverse(n: usize) -> Vec<usize> {
    let bits = n.trailing_zeros();
    (0..n)
        .map(|i| (i.reverse_bits() >> (usize::BITS - bits)) & (n - 1))
        .collect()
}

/// Flat twiddle table: for each stage `len = 2, 4, …, n`, entries
/// `exp(sign·2πi·j/len)` for `j < len/2`, concatenated.
fn twiddles(n: usize, sign: f64) -> Vec<(f64, f64)> {
    let mut tw = Vec::with_capacity(n - 1);
    let mut len = 2;
    while len <= n {
        for j in 0..len / 2 {
            let ang = sign * std::f64::consts::TAU * j as f64 / len as f64;
            tw.push((ang.cos(), ang.sin()));
        }
        len *= 2;
    }
    tw
}

/// Batched decimation-in-time radix-2 over `n` rows of width `w` (input rows
/// bit-reversed, output natural). `re`/`im` are `n*w` long, row-major.
#[inline]
fn fft_rows_dit(re: &mut [f64], im: &mut [f64], n: usize, w: usize, tw: &[(f64, f64)]) {
    let mut len = 2usize;
    let mut tw_off = 0usize;
    while len <= n {
        let half = len / 2;
        let mut base = 0usize;
        while base < n {
            let (rt, rb) = re[base * w..(base + len) * w].split_at_mut(half * w);
            let (it, ib) = im[base * w..(base + len) * w].split_at_mut(half * w);
            for j in 0..half {
                let (wr, wi) = tw[tw_off + j];
                let o = j * w;
                let rt = &mut rt[o..o + w];
                let it = &mut it[o..o + w];
                let rb = &mut rb[o..o + w];
                let ib = &mut ib[o..o + w];
                for t in 0..w {
                    let br = rb[t];
                    let bi = ib[t];
                    let tr = br * wr - bi * wi;
                    let ti = br * wi + bi * wr;
                    let ar = rt[t];
                    let ai = it[t];
                    rt[t] = ar + tr;
                    it[t] = ai + ti;
                    rb[t] = ar - tr;
                    ib[t] = ai - ti;
                }
            }
            base += len;
        }
        tw_off += half;
        len *= 2;
    }
}

/// Batched decimation-in-frequency radix-2 (input natural, output
/// bit-reversed); stages walk the shared twiddle table backwards.
#[inline]
fn fft_rows_dif(re: &mut [f64], im: &mut [f64], n: usize, w: usize, tw: &[(f64, f64)]) {
    let mut len = n;
    while len >= 2 {
        let half = len / 2;
        let tw_off = half - 1; // offset of the `len`-stage block in the flat table
        let mut base = 0usize;
        while base < n {
            let (rt, rb) = re[base * w..(base + len) * w].split_at_mut(half * w);
            let (it, ib) = im[base * w..(base + len) * w].split_at_mut(half * w);
            for j in 0..half {
                let (wr, wi) = tw[tw_off + j];
                let o = j * w;
                let rt = &mut rt[o..o + w];
                let it = &mut it[o..o + w];
                let rb = &mut rb[o..o + w];
                let ib = &mut ib[o..o + w];
                for t in 0..w {
                    let ar = rt[t];
                    let ai = it[t];
                    let br = rb[t];
                    let bi = ib[t];
                    let ur = ar - br;
                    let ui = ai - bi;
                    rt[t] = ar + br;
                    it[t] = ai + bi;
                    rb[t] = ur * wr - ui * wi;
                    ib[t] = ur * wi + ui * wr;
                }
            }
            base += len;
        }
        len = half;
    }
}

#[derive(Clone, Copy)]
struct RawJob {
    src: *const C64,
    dst: *mut C64,
    table: *const C64, // null = no premultiply
}
unsafe impl Send for RawJob {}
unsafe impl Sync for RawJob {}

thread_local! {
    static SCRATCH: RefCell<(Vec<f64>, Vec<f64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

struct AxisTables {
    tw_fwd: Vec<(f64, f64)>,
    tw_inv: Vec<(f64, f64)>,
}

/// FFT tables, wavenumbers and derivative multiplier tables for one grid.
pub struct Spectral {
    dims: [usize; 4],
    total: usize,
    axes: Vec<AxisTables>,
    /// Signed wavenumbers per axis in natural order, Nyquist replaced by 0.
    wavenum: [Vec<f64>; 4],
    /// Bit-reversal permutations per axis (spectrum index -> wavenumber index).
    bitrev: [Vec<usize>; 4],
    /// Multiplier tables for the four complex derivatives, in spectrum
    /// (scrambled) order.
    mult: [Vec<C64>; 4],
    /// 2/3-rule dealiasing mask in spectrum order (true = keep).
    dealias_keep: Vec<bool>,
}

impl Spectral {
    pub fn new(dims: [usize; 4]) -> Self {
        for &n in &dims {
            assert!(n >= 8 && n.is_power_of_two(), "grid axis must be a power of two >= 8");
        }
        let axes = dims
            .iter()
            .map(|&n| AxisTables { tw_fwd: twiddles(n, -1.0), tw_inv: twiddles(n, 1.0) })
            .collect();
        let total: usize = dims.iter().product();
        let wavenum = std::array::from_fn(|a| wavenumbers(dims[a]));
        let bitrev: [Vec<usize>; 4] = std::array::from_fn(|a| bit_reverse(dims[a]));

        // multiplier(∂z¹) = π(k_y¹ + i k_x¹), multiplier(∂z̄¹) = π(−k_y¹ + i k_x¹)
        // (from ∂z = ½(∂x − i∂y) with ∂x ↦ 2πi k_x), likewise on the second
        // factor; tables are laid out in the scrambled spectrum order.
        let pi = std::f64::consts::PI;
        let mut mult: [Vec<C64>; 4] = std::array::from_fn(|_| vec![C64::default(); total]);
        let mut dealias_keep = vec![true; total];
        let mut idx = 0usize;
        for b0 in 0..dims[0] {
            let k0 = wavenum[0][bitrev[0][b0]];
            for b1 in 0..dims[1] {
                let k1 = wavenum[1][bitrev[1][b1]];
                for b2 in 0..dims[2] {
                    let k2 = wavenum[2][bitrev[2][b2]];
                    for b3 in 0..dims[3] {
                        let k3 = wavenum[3][bitrev[3][b3]];
                        mult[0][idx] = C64::new(pi * k1, pi * k0);
                        mult[1][idx] = C64::new(pi * k3, pi * k2);
                        mult[2][idx] = C64::new(-pi * k1, pi * k0);
                        mult[3][idx] = C64::new(-pi * k3, pi * k2);
                        dealias_keep[idx] = [
                            (k0, dims[0]),
                            (k1, dims[1]),
                            (k2, dims[2]),
                            (k3, dims[3]),
                        ]
                        .iter()
                        .all(|&(k, n)| k.abs() <= (n as f64) / 3.0);
                        idx += 1;
                    }
                }
            }
        }

        Spectral { dims, total, axes, wavenum, bitrev, mult, dealias_keep }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Natural-order signed wavenumbers along `axis`.
    pub fn wavenum(&self, axis: usize) -> &[f64] {
        &self.wavenum[axis]
    }

    /// The wavenumber 4-tuple of the scrambled spectrum entry `idx`.
    pub fn mode_of_index(&self, idx: usize) -> [f64; 4] {
        let mut rem = idx;
        let mut out = [0.0; 4];
        for a in (0..4).rev() {
            let b = rem % self.dims[a];
            rem /= self.dims[a];
            out[a] = self.wavenum[a][self.bitrev[a][b]];
        }
        out
    }

    fn mult_table(&self, d: Deriv) -> &[C64] {
        match d {
            Deriv::Dz1 => &self.mult[0],
            Deriv::Dz2 => &self.mult[1],
            Deriv::Dzb1 => &self.mult[2],
            Deriv::Dzb2 => &self.mult[3],
        }
    }

    /// Fused butterfly pass on the axis pair `(a, a+1)` for a batch of
    /// planes. The first pass of a transform may read out-of-place
    /// (`src != dst`) and premultiply by `table`; subsequent passes run in
    /// place on `dst`. One parallel region covers every (job, tile) pair.
    fn pass_pair(&self, jobs: &[RawJob], a: usize, forward: bool, scale: f64) {
        let (na, nb) = (self.dims[a], self.dims[a + 1]);
        let tw_a = if forward { &self.axes[a].tw_fwd } else { &self.axes[a].tw_inv };
        let tw_b = if forward { &self.axes[a + 1].tw_fwd } else { &self.axes[a + 1].tw_inv };
        let inner: usize = self.dims[a + 2..].iter().product();
        let plane = na * nb;
        let tiles_per_job = self.total / (plane * LANES);
        let n_work = jobs.len() * tiles_per_job;
        par::for_each_index(n_work, 1, |work| {
            let job = jobs[work / tiles_per_job];
            let tile = work % tiles_per_job;
            SCRATCH.with(|cell| {
                let mut guard = cell.borrow_mut();
                let (re, im) = &mut *guard;
                re.resize(plane * LANES, 0.0);
                im.resize(plane * LANES, 0.0);
                // gather
                if inner == 1 {
                    // lanes walk LANES consecutive (a,b)-planes; loop order
                    // keeps scratch writes contiguous
                    let base = tile * LANES * plane;
                    let src_all = unsafe {
                        std::slice::from_raw_parts(job.src.add(base), LANES * plane)
                    };
                    if job.table.is_null() {
                        for r in 0..plane {
                            let rr = &mut re[r * LANES..(r + 1) * LANES];
                            let ri = &mut im[r * LANES..(r + 1) * LANES];
                            for t in 0..LANES {
                                let v = src_all[t * plane + r];
                                rr[t] = v.re;
                                ri[t] = v.im;
                            }
                        }
                    } else {
                        let tab_all = unsafe {
                            std::slice::from_raw_parts(job.table.add(base), LANES * plane)
                        };
                        for r in 0..plane {
                            let rr = &mut re[r * LANES..(r + 1) * LANES];
                            let ri = &mut im[r * LANES..(r + 1) * LANES];
                            for t in 0..LANES {
                                let v = src_all[t * plane + r];
                                let m = tab_all[t * plane + r];
                                rr[t] = v.re * m.re - v.im * m.im;
                                ri[t] = v.re * m.im + v.im * m.re;
                            }
                        }
                    }
                } else {
                    // lanes walk LANES consecutive inner indices
                    let tiles_per_outer = inner / LANES;
                    let outer = tile / tiles_per_outer;
                    let t0 = (tile % tiles_per_outer) * LANES;
                    let base = outer * plane * inner + t0;
                    for r in 0..plane {
                        let src = unsafe {
                            std::slice::from_raw_parts(job.src.add(base + r * inner) as *const f64, 2 * LANES)
                        };
                        let rr = &mut re[r * LANES..(r + 1) * LANES];
                        let ri = &mut im[r * LANES..(r + 1) * LANES];
                        if job.table.is_null() {
                            for t in 0..LANES {
                                rr[t] = src[2 * t];
                                ri[t] = src[2 * t + 1];
                            }
                        } else {
                            let tab = unsafe {
                                std::slice::from_raw_parts(job.table.add(base + r * inner), LANES)
                            };
                            for t in 0..LANES {
                                let (vr, vi) = (src[2 * t], src[2 * t + 1]);
                                let m = tab[t];
                                rr[t] = vr * m.re - vi * m.im;
                                ri[t] = vr * m.im + vi * m.re;
                            }
                        }
                    }
                }
                // axis a over rows of width nb*LANES, then axis b per a-row
                if forward {
                    fft_rows_dif(re, im, na, nb * LANES, tw_a);
                    for ja in 0..na {
                        let o = ja * nb * LANES;
                        fft_rows_dif(&mut re[o..o + nb * LANES], &mut im[o..o + nb * LANES], nb, LANES, tw_b);
                    }
                } else {
                    for ja in 0..na {
                        let o = ja * nb * LANES;
                        fft_rows_dit(&mut re[o..o + nb * LANES], &mut im[o..o + nb * LANES], nb, LANES, tw_b);
                    }
                    fft_rows_dit(re, im, na, nb * LANES, tw_a);
                }
                // scatter
                if inner == 1 {
                    let base = tile * LANES * plane;
                    let dst_all = unsafe {
                        std::slice::from_raw_parts_mut(job.dst.add(base), LANES * plane)
                    };
                    for r in 0..plane {
                        let rr = &re[r * LANES..(r + 1) * LANES];
                        let ri = &im[r * LANES..(r + 1) * LANES];
                        for t in 0..LANES {
                            dst_all[t * plane + r] = C64::new(rr[t] * scale, ri[t] * scale);
                        }
                    }
                } else {
                    let tiles_per_outer = inner / LANES;
                    let outer = tile / tiles_per_outer;
                    let t0 = (tile % tiles_per_outer) * LANES;
                    let base = outer * plane * inner + t0;
                    for r in 0..plane {
                        let dst = unsafe {
                            std::slice::from_raw_parts_mut(job.dst.add(base + r * inner) as *mut f64, 2 * LANES)
                        };
                        let rr = &re[r * LANES..(r + 1) * LANES];
                        let ri = &im[r * LANES..(r + 1) * LANES];
                        for t in 0..LANES {
                            dst[2 * t] = rr[t] * scale;
                            dst[2 * t + 1] = ri[t] * scale;
                        }
                    }
                }
            });
        });
    }

    fn run_transform(&self, jobs: &[RawJob], forward: bool) {
        if jobs.is_empty() {
            return;
        }
        // first pass may be out-of-place with premultiply; second runs in place
        self.pass_pair(jobs, 2, forward, 1.0);
        let inplace: Vec<RawJob> = jobs
            .iter()
            .map(|j| RawJob { src: j.dst as *const C64, dst: j.dst, table: std::ptr::null() })
            .collect();
        let scale = if forward { 1.0 } else { 1.0 / self.total as f64 };
        self.pass_pair(&inplace, 0, forward, scale);
    }

    /// Forward transforms of a batch of fields into spectrum buffers
    /// (scrambled order). Sources are left untouched.
    pub fn forward_batch(&self, fields: &[&[C64]], specs: &mut [&mut [C64]]) {
        assert_eq!(fields.len(), specs.len());
        let jobs: Vec<RawJob> = fields
            .iter()
            .zip(specs.iter_mut())
            .map(|(f, s)| {
                assert_eq!(f.len(), self.total);
                assert_eq!(s.len(), self.total);
                RawJob { src: f.as_ptr(), dst: s.as_mut_ptr(), table: std::ptr::null() }
            })
            .collect();
        self.run_transform(&jobs, true);
    }

    /// Batched inverse of `mult(dirs[i]) ⊙ specs[i]` into `outs[i]`; spectra
    /// are left untouched and may repeat across entries.
    pub fn derivative_batch(&self, specs: &[&[C64]], dirs: &[Deriv], outs: &mut [&mut [C64]]) {
        assert_eq!(specs.len(), dirs.len());
        assert_eq!(specs.len(), outs.len());
        let jobs: Vec<RawJob> = specs
            .iter()
            .zip(dirs)
            .zip(outs.iter_mut())
            .map(|((s, &d), o)| {
                assert_eq!(s.len(), self.total);
                assert_eq!(o.len(), self.total);
                RawJob { src: s.as_ptr(), dst: o.as_mut_ptr(), table: self.mult_table(d).as_ptr() }
            })
            .collect();
        self.run_transform(&jobs, false);
    }

    /// Batched in-place inverse transforms.
    pub fn inverse_batch(&self, fields: &mut [&mut [C64]]) {
        let jobs: Vec<RawJob> = fields
            .iter_mut()
            .map(|f| {
                assert_eq!(f.len(), self.total);
                RawJob { src: f.as_ptr(), dst: f.as_mut_ptr(), table: std::ptr::null() }
            })
            .collect();
        self.run_transform(&jobs, false);
    }

    /// In-place forward 4D transform (unnormalized, scrambled spectrum order).
    pub fn forward_inplace(&self, data: &mut [C64]) {
        assert_eq!(data.len(), self.total);
        let jobs = [RawJob { src: data.as_ptr(), dst: data.as_mut_ptr(), table: std::ptr::null() }];
        self.run_transform(&jobs, true);
    }

    /// In-place inverse 4D transform from scrambled spectrum order,
    /// normalized by 1/total.
    pub fn inverse_inplace(&self, data: &mut [C64]) {
        assert_eq!(data.len(), self.total);
        let jobs = [RawJob { src: data.as_ptr(), dst: data.as_mut_ptr(), table: std::ptr::null() }];
        self.run_transform(&jobs, false);
    }

    /// Forward transform of `field` into `spec` (field untouched).
    pub fn forward(&self, field: &[C64], spec: &mut Vec<C64>) {
        spec.clear();
        spec.resize(self.total, C64::default());
        self.forward_batch(&[field], &mut [&mut spec[..]]);
    }

    /// Inverse transform of a spectrum multiplied by one derivative table.
    pub fn derivative_from_spec(&self, spec: &[C64], d: Deriv, out: &mut Vec<C64>) {
        out.clear();
        out.resize(self.total, C64::default());
        self.derivative_batch(&[spec], &[d], &mut [&mut out[..]]);
    }

    /// Inverse transform of `Σ_j mult(dirs[j]) ⊙ specs[j]` — a fused
    /// divergence-type combination costing a single inverse FFT.
    pub fn combined_derivative(&self, specs: &[&[C64]], dirs: &[Deriv], out: &mut Vec<C64>) {
        assert_eq!(specs.len(), dirs.len());
        out.clear();
        out.resize(self.total, C64::default());
        for (spec, &d) in specs.iter().zip(dirs) {
            let table = self.mult_table(d);
            for ((o, s), m) in out.iter_mut().zip(spec.iter()).zip(table) {
                *o += s * m;
            }
        }
        self.inverse_inplace(out);
    }

    /// Physical-space derivative: forward, multiply, inverse.
    pub fn derivative(&self, field: &[C64], d: Deriv, out: &mut Vec<C64>) {
        let mut spec = Vec::new();
        self.forward(field, &mut spec);
        self.derivative_from_spec(&spec, d, out);
    }

    /// Zero all modes outside the 2/3 dealiasing ball.
    pub fn dealias_spec(&self, spec: &mut [C64]) {
        for (v, &keep) in spec.iter_mut().zip(&self.dealias_keep) {
            if !keep {
                *v = C64::default();
            }
        }
    }

    /// Dealias a physical-space field (forward, mask, inverse).
    pub fn dealias_field(&self, field: &mut Vec<C64>) {
        self.forward_inplace(field);
        self.dealias_spec(field);
        self.inverse_inplace(field);
    }
}

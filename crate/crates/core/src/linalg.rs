//! Small complex matrices (rank 1–3) for nodewise bundle algebra: products,
//! inverses, Hermitian eigensolves (closed form at r = 2, cyclic Jacobi at
//! r = 3), spectral functions, and the Sylvester solve used by the gauge
//! transport.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const MAX_RANK: usize = 3;

/// Dense r×r complex matrix, r ≤ 3, row-major in a fixed array.
#[derive(Clone, Copy, Debug)]
pub struct Mat {
    r: usize,
    a: [C64; MAX_RANK * MAX_RANK],
}

impl Mat {
    pub fn zero(r: usize) -> Self {
        assert!(r >= 1 && r <= MAX_RANK);
        Mat { r, a: [C64::default(); 9] }
    }

    pub fn identity(r: usize) -> Self {
        let mut m = Mat::zero(r);
        for i in 0..r {
            m.a[i * MAX_RANK + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn diag_real(vals: &[f64]) -> Self {
        let mut m = Mat::zero(vals.len());
        for (i, &v) in vals.iter().enumerate() {
            m.a[i * MAX_RANK + i] = C64::new(v, 0.0);
        }
        m
    }

    pub fn from_rows(r: usize, rows: &[C64]) -> Self {
        assert_eq!(rows.len(), r * r);
        let mut m = Mat::zero(r);
        for i in 0..r {
            for j in 0..r {
                m.a[i * MAX_RANK + j] = rows[i * r + j];
            }
        }
        m
    }

    /// Gather from `planes[e][node]` storage (entry index e = i*r + j).
    pub fn from_planes(r: usize, planes: &[Vec<C64>], node: usize) -> Self {
        debug_assert_eq!(planes.len(), r * r);
        let mut m = Mat::zero(r);
        for i in 0..r {
            for j in 0..r {
                m.a[i * MAX_RANK + j] = planes[i * r + j][node];
            }
        }
        m
    }

    pub fn write_planes(&self, planes: &mut [Vec<C64>], node: usize) {
        for i in 0..self.r {
            for j in 0..self.r {
                planes[i * self.r + j][node] = self.a[i * MAX_RANK + j];
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i * MAX_RANK + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.a[i * MAX_RANK + j] = v;
    }

    pub fn add(&self, o: &Mat) -> Mat {
        debug_assert_eq!(self.r, o.r);
        let mut m = *self;
        for i in 0..MAX_RANK * MAX_RANK {
            m.a[i] += o.a[i];
        }
        m
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        debug_assert_eq!(self.r, o.r);
        let mut m = *self;
        for i in 0..MAX_RANK * MAX_RANK {
            m.a[i] -= o.a[i];
        }
        m
    }

    pub fn scale(&self, s: C64) -> Mat {
        let mut m = *self;
        for v in &mut m.a {
            *v *= s;
        }
        m
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        debug_assert_eq!(self.r, o.r);
        let r = self.r;
        let mut m = Mat::zero(r);
        for i in 0..r {
            for k in 0..r {
                let aik = self.a[i * MAX_RANK + k];
                for j in 0..r {
                    m.a[i * MAX_RANK + j] += aik * o.a[k * MAX_RANK + j];
                }
            }
        }
        m
    }

    pub fn commutator(&self, o: &Mat) -> Mat {
        self.mul(o).sub(&o.mul(self))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat {
        let r = self.r;
        let mut m = Mat::zero(r);
        for i in 0..r {
            for j in 0..r {
                m.a[j * MAX_RANK + i] = self.a[i * MAX_RANK + j].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.r).map(|i| self.a[i * MAX_RANK + i]).sum()
    }

    pub fn det(&self) -> C64 {
        let a = |i: usize, j: usize| self.a[i * MAX_RANK + j];
        match self.r {
            1 => a(0, 0),
            2 => a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
            _ => {
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
            }
        }
    }

    pub fn inverse(&self) -> Result<Mat> {
        let d = self.det();
        if d.norm() < 1e-300 {
            return Err(Error::IllConditionedGauge { node: 0, cond: f64::INFINITY });
        }
        let a = |i: usize, j: usize| self.a[i * MAX_RANK + j];
        let inv_d = C64::new(1.0, 0.0) / d;
        let mut m = Mat::zero(self.r);
        match self.r {
            1 => m.set(0, 0, inv_d),
            2 => {
                m.set(0, 0, a(1, 1) * inv_d);
                m.set(0, 1, -a(0, 1) * inv_d);
                m.set(1, 0, -a(1, 0) * inv_d);
                m.set(1, 1, a(0, 0) * inv_d);
            }
            _ => {
                // adjugate / det
                for i in 0..3 {
                    for j in 0..3 {
                        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                        let cof = a(i1, j1) * a(i2, j2) - a(i1, j2) * a(i2, j1);
                        m.set(j, i, cof * inv_d);
                    }
                }
            }
        }
        Ok(m)
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.a.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn herm_deviation(&self) -> f64 {
        self.sub(&self.adjoint()).norm()
    }

    /// Symmetrize: (A + A†)/2.
    pub fn hermitize(&self) -> Mat {
        self.add(&self.adjoint()).scale(C64::new(0.5, 0.0))
    }

    /// Eigen-decomposition of a Hermitian matrix: ascending real eigenvalues
    /// and the unitary of column eigenvectors.
    pub fn herm_eigen(&self) -> ([f64; MAX_RANK], Mat) {
        let r = self.r;
        let mut vals = [0.0f64; MAX_RANK];
        match r {
            1 => {
                vals[0] = self.get(0, 0).re;
                (vals, Mat::identity(1))
            }
            2 => {
                let a = self.get(0, 0).re;
                let d = self.get(1, 1).re;
                let b = self.get(0, 1);
                let mean = 0.5 * (a + d);
                let disc = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
                let (lo, hi) = (mean - disc, mean + disc);
                vals[0] = lo;
                vals[1] = hi;
                let mut v = Mat::identity(2);
                if b.norm_sqr() > 1e-300 {
                    // eigenvector for hi: (b, hi - a), normalized; lo orthogonal
                    let v1 = b;
                    let v2 = C64::new(hi - a, 0.0);
                    let n = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
                    let (v1, v2) = (v1 / n, v2 / n);
                    v.set(0, 1, v1);
                    v.set(1, 1, v2);
                    v.set(0, 0, -v2.conj());
                    v.set(1, 0, v1.conj());
                }
                (vals, v)
            }
            _ => self.jacobi_eigen(),
        }
    }

    /// Cyclic Jacobi for 3×3 Hermitian matrices.
    fn jacobi_eigen(&self) -> ([f64; MAX_RANK], Mat) {
        let r = self.r;
        let mut a = *self;
        let mut v = Mat::identity(r);
        for _sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..r {
                for q in (p + 1)..r {
                    off += a.get(p, q).norm_sqr();
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..r {
                for q in (p + 1)..r {
                    let apq = a.get(p, q);
                    if apq.norm() < 1e-18 {
                        continue;
                    }
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let phase = apq / apq.norm();
                    let tau = (aqq - app) / (2.0 * apq.norm());
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // plane rotation: G_pp = c, G_pq = s·phase,
                    // G_qp = -s·conj(phase), G_qq = c; apply A <- G† A G
                    let gpq = phase * s;
                    for k in 0..r {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, akp * c - akq * gpq.conj());
                        a.set(k, q, akp * gpq + akq * c);
                    }
                    for k in 0..r {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, apk * c - aqk * gpq);
                        a.set(q, k, apk * gpq.conj() + aqk * c);
                    }
                    for k in 0..r {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, vkp * c - vkq * gpq.conj());
                        v.set(k, q, vkp * gpq + vkq * c);
                    }
                }
            }
        }
        let mut vals = [0.0f64; MAX_RANK];
        for i in 0..r {
            vals[i] = a.get(i, i).re;
        }
        // ascending order
        let mut idx = [0usize, 1, 2];
        idx[..r].sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
        let mut sv = [0.0f64; MAX_RANK];
        let mut sm = Mat::zero(r);
        for (col, &i) in idx[..r].iter().enumerate() {
            sv[col] = vals[i];
            for k in 0..r {
                sm.set(k, col, v.get(k, i));
            }
        }
        (sv, sm)
    }

    /// Apply a real function to the spectrum of a Hermitian matrix.
    pub fn herm_fn(&self, f: impl Fn(f64) -> f64) -> Mat {
        let (vals, v) = self.herm_eigen();
        let r = self.r;
        let mut d = Mat::zero(r);
        for i in 0..r {
            d.set(i, i, C64::new(f(vals[i]), 0.0));
        }
        v.mul(&d).mul(&v.adjoint())
    }

    /// Positive-definite square root; errors when an eigenvalue is ≤ 0.
    pub fn sqrt_pd(&self) -> Result<Mat> {
        let (vals, v) = self.herm_eigen();
        if vals[..self.r].iter().any(|&x| x <= 0.0) {
            return Err(Error::NotPositiveDefinite { node: None });
        }
        let r = self.r;
        let mut d = Mat::zero(r);
        for i in 0..r {
            d.set(i, i, C64::new(vals[i].sqrt(), 0.0));
        }
        Ok(v.mul(&d).mul(&v.adjoint()))
    }

    pub fn log_pd(&self) -> Result<Mat> {
        let (vals, _) = self.herm_eigen();
        if vals[..self.r].iter().any(|&x| x <= 0.0) {
            return Err(Error::NotPositiveDefinite { node: None });
        }
        Ok(self.herm_fn(f64::ln))
    }

    /// exp(A) for skew-Hermitian A (unitary result), via the Hermitian iA.
    pub fn exp_skew(&self) -> Mat {
        let h = self.scale(C64::i()).hermitize();
        let (vals, v) = h.herm_eigen();
        let r = self.r;
        let mut d = Mat::zero(r);
        for i in 0..r {
            // A = -i h, so exp(A) has eigenvalues exp(-i λ)
            d.set(i, i, (-C64::i() * vals[i]).exp());
        }
        v.mul(&d).mul(&v.adjoint())
    }

    /// Smallest and largest singular values, via eigen of A†A.
    pub fn singular_range(&self) -> (f64, f64) {
        let (vals, _) = self.adjoint().mul(self).herm_eigen();
        let r = self.r;
        let lo = vals[..r].iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals[..r].iter().cloned().fold(0.0f64, f64::max);
        (lo.max(0.0).sqrt(), hi.max(0.0).sqrt())
    }

    pub fn cond(&self) -> f64 {
        let (lo, hi) = self.singular_range();
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Solve X·W + W·X = B for X, with W Hermitian positive definite
    /// (eigenbasis division by λ_i + λ_j).
    pub fn sylvester_pd(w: &Mat, b: &Mat) -> Result<Mat> {
        let (vals, v) = w.herm_eigen();
        let r = w.r;
        if vals[..r].iter().any(|&x| x <= 0.0) {
            return Err(Error::NotPositiveDefinite { node: None });
        }
        let bt = v.adjoint().mul(b).mul(&v);
        let mut x = Mat::zero(r);
        for i in 0..r {
            for j in 0..r {
                x.set(i, j, bt.get(i, j) / (vals[i] + vals[j]));
            }
        }
        Ok(v.mul(&x).mul(&v.adjoint()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    fn rand_mat(r: usize, next: &mut impl FnMut() -> f64) -> Mat {
        let mut m = Mat::zero(r);
        for i in 0..r {
            for j in 0..r {
                m.set(i, j, C64::new(next(), next()));
            }
        }
        m
    }

    #[test]
    fn inverse_round_trip() {
        let mut next = rand_stream(7);
        for r in 1..=3 {
            for _ in 0..20 {
                let m = rand_mat(r, &mut next).add(&Mat::identity(r).scale(C64::new(2.0, 0.0)));
                let inv = m.inverse().unwrap();
                let p = m.mul(&inv).sub(&Mat::identity(r));
                assert!(p.norm() < 1e-12, "r={r} residual {}", p.norm());
            }
        }
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let mut next = rand_stream(11);
        for r in 1..=3 {
            for _ in 0..50 {
                let g = rand_mat(r, &mut next);
                let h = g.add(&g.adjoint()).scale(C64::new(0.5, 0.0));
                let (vals, v) = h.herm_eigen();
                let u = v.adjoint().mul(&v).sub(&Mat::identity(r));
                assert!(u.norm() < 1e-12, "unitarity {}", u.norm());
                let mut d = Mat::zero(r);
                for i in 0..r {
                    d.set(i, i, C64::new(vals[i], 0.0));
                }
                let rec = v.mul(&d).mul(&v.adjoint()).sub(&h);
                assert!(rec.norm() < 1e-12 * (1.0 + h.norm()), "recon {}", rec.norm());
                for i in 1..r {
                    assert!(vals[i] >= vals[i - 1] - 1e-13);
                }
            }
        }
    }

    #[test]
    fn sqrt_and_log_of_positive_matrices() {
        let mut next = rand_stream(23);
        for r in 1..=3 {
            for _ in 0..20 {
                let g = rand_mat(r, &mut next);
                let h = g.mul(&g.adjoint()).add(&Mat::identity(r).scale(C64::new(0.5, 0.0)));
                let s = h.sqrt_pd().unwrap();
                assert!(s.mul(&s).sub(&h).norm() < 1e-11 * (1.0 + h.norm()));
                let l = h.log_pd().unwrap();
                let e = l.herm_fn(f64::exp);
                assert!(e.sub(&h).norm() < 1e-10 * (1.0 + h.norm()));
            }
        }
    }

    #[test]
    fn exp_skew_is_unitary() {
        let mut next = rand_stream(39);
        for r in 1..=3 {
            for _ in 0..20 {
                let g = rand_mat(r, &mut next);
                let a = g.sub(&g.adjoint()).scale(C64::new(0.5, 0.0));
                let u = a.exp_skew();
                let res = u.adjoint().mul(&u).sub(&Mat::identity(r)).norm();
                assert!(res < 1e-12, "unitary {res}");
            }
        }
    }

    #[test]
    fn sylvester_solves() {
        let mut next = rand_stream(51);
        for r in 1..=3 {
            for _ in 0..20 {
                let g = rand_mat(r, &mut next);
                let w = g.mul(&g.adjoint()).add(&Mat::identity(r));
                let b = rand_mat(r, &mut next);
                let x = Mat::sylvester_pd(&w, &b).unwrap();
                let res = x.mul(&w).add(&w.mul(&x)).sub(&b).norm();
                assert!(res < 1e-11 * (1.0 + b.norm()), "sylvester {res}");
            }
        }
    }
}

//! Dense complex linear algebra sized for truncated single-mode problems:
//! row-major matrices up to a few thousand, a scaling-and-squaring matrix
//! exponential, a symmetric tridiagonal eigensolver, and the scalar solvers
//! (Brent, bisection, golden section) shared by the locus and fringe code.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Row-major dense complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    pub a: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> CMat {
        CMat { n, a: vec![C64::ZERO; n * n] }
    }

    pub fn identity(n: usize) -> CMat {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = C64::ONE;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.a[i * self.n + j] = v;
    }

    pub fn adjoint(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let n = self.n;
        let mut best = 0.0f64;
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += self.a[i * n + j].norm();
            }
            best = best.max(s);
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: C64) {
        for z in &mut self.a {
            *z *= s;
        }
    }

    pub fn add_assign(&mut self, other: &CMat) {
        debug_assert_eq!(self.n, other.n);
        for (z, w) in self.a.iter_mut().zip(&other.a) {
            *z += w;
        }
    }

    /// `self * other`, parallelized over output rows. The per-row loop runs in
    /// a fixed order, so results do not depend on the worker count.
    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        out.a
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                for k in 0..n {
                    let aik = self.a[i * n + k];
                    if aik == C64::ZERO {
                        continue;
                    }
                    let brow = &other.a[k * n..(k + 1) * n];
                    for (r, b) in row.iter_mut().zip(brow) {
                        *r += aik * b;
                    }
                }
            });
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n, v.len());
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.a[i * n..(i + 1) * n];
                let mut acc = C64::ZERO;
                for (a, x) in row.iter().zip(v) {
                    acc += a * x;
                }
                acc
            })
            .collect()
    }
}

/// exp(A) by scaling and squaring with a fixed-length Taylor evaluation.
///
/// The argument is scaled so its 1-norm is at most 0.5; 18 Taylor terms then
/// leave a remainder below 1e-22, far under the squaring amplification for the
/// norms this crate produces.
pub fn matexp(a: &CMat) -> CMat {
    let norm = a.one_norm();
    let mut s = 0u32;
    while norm / f64::powi(2.0, s as i32) > 0.5 {
        s += 1;
    }
    let mut b = a.clone();
    b.scale(C64::new(1.0 / f64::powi(2.0, s as i32), 0.0));

    let mut sum = CMat::identity(a.n);
    let mut term = CMat::identity(a.n);
    for k in 1..=18 {
        term = term.matmul(&b);
        term.scale(C64::new(1.0 / k as f64, 0.0));
        sum.add_assign(&term);
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Eigendecomposition of a real symmetric tridiagonal matrix.
///
/// `vectors` is row-major: `vectors[i * n + k]` is component `i` of the
/// eigenvector belonging to `eigenvalues[k]`. The columns are orthonormal.
pub struct TridiagEigen {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<f64>,
}

/// Implicit-shift QL iteration (the classical `tqli` routine) with eigenvector
/// accumulation. `diag` has length n, `off` length n-1.
pub fn eigh_tridiagonal(diag: &[f64], off: &[f64]) -> Result<TridiagEigen> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n, "off-diagonal length must be n-1");
    let mut d = diag.to_vec();
    // e[i] couples i and i+1; e[n-1] is a zero sentinel.
    let mut e = Vec::with_capacity(n);
    e.extend_from_slice(off);
    e.push(0.0);
    let mut z = vec![0.0f64; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::SolverFailure(
                    "tridiagonal QL iteration failed to converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            // Shift by the eigenvalue of the trailing 2x2 closest to d[l].
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Deflate: the rotation chain collapsed early.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Sort ascending, permuting eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0f64; n * n];
    for (newk, &oldk) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + newk] = z[i * n + oldk];
        }
    }
    Ok(TridiagEigen { n, eigenvalues, vectors })
}

/// Brent's method on a bracketing interval. `f(a)` and `f(b)` must have
/// opposite signs. Converges to `xtol + rtol * |x|`.
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    a0: f64,
    b0: f64,
    xtol: f64,
    rtol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b) = (a0, b0);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::SolverFailure(format!(
            "brent: no sign change on [{a0:.6e}, {b0:.6e}]"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * (xtol + rtol * b.abs());
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, falling back to secant.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let rr = fb / fc;
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(xm) };
        fb = f(b);
        if fb.signum() * fc.signum() > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(Error::SolverFailure("brent: iteration limit".into()))
}

/// Smallest `x` in `(lo, hi]` where `pred` holds, assuming `pred(lo) == false`,
/// `pred(hi) == true`, and a single false-to-true transition. Bisects to
/// relative tolerance `rtol`.
pub fn bisect_transition<F: FnMut(f64) -> bool>(
    mut pred: F,
    mut lo: f64,
    mut hi: f64,
    rtol: f64,
) -> f64 {
    for _ in 0..200 {
        if (hi - lo) <= rtol * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, iters: usize) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

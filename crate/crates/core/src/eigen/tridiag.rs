//! Householder tridiagonalization with Sturm-sequence bisection.
//!
//! Used when only one eigenpair of the reduced matrix is needed, which is the
//! case for every objective evaluation of the alpha optimizer.

use rug::ops::NegAssign;
use rug::{Assign, Float};

use super::dense::{dot, FloatMatrix};
use crate::error::{invalid, Error, Result};

struct Reflector {
    v: Vec<Float>,
    beta: Float,
}

/// `A = Q T Q^T` with `T` tridiagonal and `Q` a product of Householder reflectors.
pub struct Tridiagonal {
    prec: u32,
    diag: Vec<Float>,
    off: Vec<Float>,
    off_sq: Vec<Float>,
    reflectors: Vec<Reflector>,
}

impl Tridiagonal {
    pub fn new(a: &FloatMatrix) -> Self {
        let n = a.n();
        let prec = a.prec();
        let mut w = a.clone();
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut tmp = Float::new(prec);

        for k in 0..n.saturating_sub(2) {
            diag.push(w.get(k, k).clone());
            let m = n - k - 1;
            // x = A[k+1.., k]; only the lower triangle is kept current
            let mut v: Vec<Float> = (k + 1..n).map(|i| w.get(i, k).clone()).collect();
            let sigma = dot(prec, &v, &v);
            if sigma.is_zero() {
                off.push(Float::new(prec));
                reflectors.push(Reflector { v, beta: Float::new(prec) });
                continue;
            }
            let mut alpha = sigma.clone().sqrt();
            if !v[0].is_sign_negative() {
                alpha.neg_assign();
            }
            // beta = 1 / (|alpha| (|alpha| + |x0|)), v = x - alpha e1
            let mut beta = Float::with_val(prec, v[0].abs_ref());
            let abs_alpha = Float::with_val(prec, alpha.abs_ref());
            beta += &abs_alpha;
            beta *= &abs_alpha;
            beta.recip_mut();
            v[0] -= &alpha;
            off.push(alpha);

            // p = beta * B v, reading only the lower triangle of B = A[k+1.., k+1..]
            let mut p = vec![Float::new(prec); m];
            for i in 0..m {
                let row = &w.row(k + 1 + i)[k + 1..];
                for j in 0..i {
                    p[i] += &row[j] * &v[j];
                    tmp.assign(&row[j] * &v[i]);
                    p[j] += &tmp;
                }
                p[i] += &row[i] * &v[i];
            }
            for x in &mut p {
                *x *= &beta;
            }
            // w = p - (beta/2)(p.v) v
            let mut kk = dot(prec, &p, &v);
            kk *= &beta;
            kk /= 2;
            for (x, vi) in p.iter_mut().zip(&v) {
                *x -= &kk * vi;
            }
            // B -= v w^T + w v^T on the lower triangle
            for i in 0..m {
                let row = &mut w.row_mut(k + 1 + i)[k + 1..];
                for j in 0..=i {
                    row[j] -= &v[i] * &p[j];
                    row[j] -= &p[i] * &v[j];
                }
            }
            reflectors.push(Reflector { v, beta });
        }
        if n >= 2 {
            diag.push(w.get(n - 2, n - 2).clone());
            off.push(w.get(n - 1, n - 2).clone());
        }
        if n >= 1 {
            diag.push(w.get(n - 1, n - 1).clone());
        }
        let off_sq = off.iter().map(|e| Float::with_val(prec, e.square_ref())).collect();
        Tridiagonal {
            prec,
            diag,
            off,
            off_sq,
            reflectors,
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[Float] {
        &self.diag
    }

    pub fn off_diagonal(&self) -> &[Float] {
        &self.off
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: &Float) -> usize {
        let prec = self.prec;
        let pivmin = self.pivmin();
        let mut q = Float::with_val(prec, &self.diag[0] - x);
        let mut count = 0;
        let mut t = Float::new(prec);
        for i in 0..self.n() {
            if i > 0 {
                t.assign(&self.off_sq[i - 1] / &q);
                q.assign(&self.diag[i] - x);
                q -= &t;
            }
            if q.is_zero() {
                q.assign(&pivmin);
                q.neg_assign();
            }
            if q.is_sign_negative() {
                count += 1;
            }
        }
        count
    }

    fn pivmin(&self) -> Float {
        let scale = self.off_sq.iter().fold(Float::with_val(self.prec, 1), |a, b| if *b > a { b.clone() } else { a });
        scale >> (2 * self.prec as i32)
    }

    fn gershgorin(&self) -> (Float, Float) {
        let prec = self.prec;
        let n = self.n();
        let mut lo = Float::with_val(prec, f64::INFINITY);
        let mut hi = Float::with_val(prec, f64::NEG_INFINITY);
        for i in 0..n {
            let mut radius = Float::new(prec);
            if i > 0 {
                radius += Float::with_val(prec, self.off[i - 1].abs_ref());
            }
            if i + 1 < n {
                radius += Float::with_val(prec, self.off[i].abs_ref());
            }
            let a = Float::with_val(prec, &self.diag[i] - &radius);
            let b = Float::with_val(prec, &self.diag[i] + &radius);
            if a < lo {
                lo = a;
            }
            if b > hi {
                hi = b;
            }
        }
        (lo, hi)
    }

    /// The `index`-th smallest eigenvalue (0-based), bisected to working precision.
    pub fn eigenvalue(&self, index: usize) -> Result<Float> {
        let n = self.n();
        if index >= n {
            return invalid(format!("eigenvalue index {index} out of range for order {n}"));
        }
        let prec = self.prec;
        let (mut lo, mut hi) = self.gershgorin();
        let span = Float::with_val(prec, &hi - &lo);
        let pad = Float::with_val(prec, &span >> 20);
        lo -= &pad;
        hi += &pad;
        let floor = Float::with_val(prec, span.clone() + 1) >> (prec as i32 + 8);
        let mut mid = Float::new(prec);
        let mut width = Float::new(prec);
        let mut target = Float::new(prec);
        for _ in 0..(4 * prec as usize + 200) {
            width.assign(&hi - &lo);
            target.assign(lo.abs_ref());
            if hi.clone().abs() > target {
                target.assign(hi.abs_ref());
            }
            target >>= prec as i32 - 6;
            if width <= target || width <= floor {
                mid.assign(&lo + &hi);
                mid /= 2;
                return Ok(mid);
            }
            mid.assign(&lo + &hi);
            mid /= 2;
            if self.count_below(&mid) > index {
                hi.assign(&mid);
            } else {
                lo.assign(&mid);
            }
        }
        Err(Error::Convergence {
            method: "Sturm bisection",
            iterations: 4 * prec as usize + 200,
            residual: width.to_f64(),
        })
    }

    /// Unit eigenvector of the original matrix for eigenvalue `lambda` (from
    /// [`Tridiagonal::eigenvalue`]), by inverse iteration on `T` followed by the
    /// Householder back-transformation.
    pub fn eigenvector(&self, lambda: &Float) -> Vec<Float> {
        let n = self.n();
        let prec = self.prec;
        if n == 1 {
            return vec![Float::with_val(prec, 1)];
        }
        let lu = ShiftedLu::new(self, lambda);
        let mut x: Vec<Float> = (0..n)
            .map(|i| Float::with_val(prec, 1.0 + (i % 7) as f64 * 0.125))
            .collect();
        for _ in 0..3 {
            lu.solve(&mut x);
            let nrm = dot(prec, &x, &x).sqrt();
            for xi in &mut x {
                *xi /= &nrm;
            }
        }
        let mut t = Float::new(prec);
        for (k, r) in self.reflectors.iter().enumerate().rev() {
            if r.beta.is_zero() {
                continue;
            }
            let tail = &mut x[k + 1..];
            t.assign(&dot(prec, &r.v, tail) * &r.beta);
            for (xi, vi) in tail.iter_mut().zip(&r.v) {
                *xi -= &t * vi;
            }
        }
        x
    }
}

/// LU of `T - lambda I` with partial pivoting (LAPACK `gttrf` layout).
struct ShiftedLu {
    dl: Vec<Float>,
    d: Vec<Float>,
    du: Vec<Float>,
    du2: Vec<Float>,
    swapped: Vec<bool>,
    tiny: Float,
}

impl ShiftedLu {
    fn new(t: &Tridiagonal, lambda: &Float) -> Self {
        let n = t.n();
        let prec = t.prec;
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut d: Vec<Float> = t.diag.iter().map(|x| Float::with_val(prec, x - lambda)).collect();
        let mut du2 = vec![Float::new(prec); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let (lo, hi) = t.gershgorin();
        let scale = if lo.clone().abs() > hi.clone().abs() { lo.abs() } else { hi.abs() };
        let tiny = Float::with_val(prec, scale + 1) >> (prec as i32 - 4);
        let mut fact = Float::new(prec);
        let mut tmp = Float::new(prec);
        for i in 0..n - 1 {
            if d[i].clone().abs() >= dl[i].clone().abs() {
                if d[i].is_zero() {
                    d[i].assign(&tiny);
                }
                fact.assign(&dl[i] / &d[i]);
                dl[i].assign(&fact);
                tmp.assign(&fact * &du[i]);
                d[i + 1] -= &tmp;
            } else {
                fact.assign(&d[i] / &dl[i]);
                let (head, tail) = d.split_at_mut(i + 1);
                head[i].assign(&dl[i]);
                dl[i].assign(&fact);
                tmp.assign(&du[i]);
                du[i].assign(&tail[0]);
                tail[0] *= &fact;
                tail[0].neg_assign();
                tail[0] += &tmp;
                if i + 1 < n - 1 {
                    du2[i].assign(&du[i + 1]);
                    du[i + 1] *= &fact;
                    du[i + 1].neg_assign();
                }
                swapped[i] = true;
            }
        }
        if d[n - 1].is_zero() {
            d[n - 1].assign(&tiny);
        }
        ShiftedLu {
            dl,
            d,
            du,
            du2,
            swapped,
            tiny,
        }
    }

    fn solve(&self, b: &mut [Float]) {
        let n = b.len();
        let mut tmp = Float::new(self.tiny.prec());
        for i in 0..n - 1 {
            if self.swapped[i] {
                tmp.assign(&b[i]);
                let next = b[i + 1].clone();
                b[i + 1].assign(&tmp);
                b[i + 1] -= &self.dl[i] * &next;
                b[i].assign(&next);
            } else {
                let (head, tail) = b.split_at_mut(i + 1);
                tail[0] -= &self.dl[i] * &head[i];
            }
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                let next = b[i + 1].clone();
                b[i] -= &self.du[i] * &next;
            }
            if i + 2 < n {
                let next2 = b[i + 2].clone();
                b[i] -= &self.du2[i] * &next2;
            }
            b[i] /= &self.d[i];
        }
    }
}

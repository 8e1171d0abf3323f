use nalgebra::DMatrix;
use rug::{Assign, Float};

use crate::assembly::TriMatrix;

/// Dense square matrix of MPFR floats, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatMatrix {
    n: usize,
    prec: u32,
    data: Vec<Float>,
}

impl FloatMatrix {
    pub fn zeros(n: usize, prec: u32) -> Self {
        FloatMatrix {
            n,
            prec,
            data: vec![Float::new(prec); n * n],
        }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = Self::zeros(n, prec);
        for i in 0..n {
            m.get_mut(i, i).assign(1);
        }
        m
    }

    /// Row-major `f64` values, rounded to `prec` bits (exact for `prec >= 53`).
    pub fn from_f64(n: usize, prec: u32, values: &[f64]) -> Self {
        assert_eq!(values.len(), n * n);
        FloatMatrix {
            n,
            prec,
            data: values.iter().map(|v| Float::with_val(prec, *v)).collect(),
        }
    }

    /// Full symmetric matrix from packed exact storage, correctly rounded.
    pub fn from_symmetric(m: &TriMatrix, prec: u32) -> Self {
        let n = m.n();
        let mut out = Self::zeros(n, prec);
        for i in 0..n {
            for j in 0..=i {
                out.get_mut(i, j).assign(m.lower(i, j));
                if i != j {
                    let v = out.get(i, j).clone();
                    *out.get_mut(j, i) = v;
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Float {
        &self.data[i * self.n + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Float {
        &mut self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Float] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Float] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    /// Mutable row `i` together with shared row `k`, `k < i`.
    pub(crate) fn row_pair(&mut self, i: usize, k: usize) -> (&mut [Float], &[Float]) {
        debug_assert!(k < i);
        let n = self.n;
        let (head, tail) = self.data.split_at_mut(i * n);
        (&mut tail[..n], &head[k * n..(k + 1) * n])
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n, self.prec);
        for i in 0..n {
            for j in 0..n {
                out.get_mut(j, i).assign(self.get(i, j));
            }
        }
        out
    }

    /// Replace the matrix by `(A + A^T) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        let mut avg = Float::new(self.prec);
        for i in 0..n {
            for j in 0..i {
                avg.assign(self.get(i, j) + self.get(j, i));
                avg /= 2;
                self.get_mut(i, j).assign(&avg);
                self.get_mut(j, i).assign(&avg);
            }
        }
    }

    pub fn max_asymmetry(&self) -> Float {
        let mut worst = Float::new(self.prec);
        let mut d = Float::new(self.prec);
        for i in 0..self.n {
            for j in 0..i {
                d.assign(self.get(i, j) - self.get(j, i));
                d.abs_mut();
                if d > worst {
                    worst.assign(&d);
                }
            }
        }
        worst
    }

    pub fn matvec(&self, x: &[Float]) -> Vec<Float> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.prec, self.row(i), x)).collect()
    }

    pub fn trace(&self) -> Float {
        let mut t = Float::new(self.prec);
        for i in 0..self.n {
            t += self.get(i, i);
        }
        t
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_f64())
    }

    /// `self + factor * other`, elementwise.
    pub fn add_scaled(&self, factor: &Float, other: &FloatMatrix) -> FloatMatrix {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o += factor * b;
        }
        out
    }

    pub fn scale(&mut self, factor: &Float) {
        for v in &mut self.data {
            *v *= factor;
        }
    }
}

pub(crate) fn dot(prec: u32, a: &[Float], b: &[Float]) -> Float {
    let mut acc = Float::new(prec);
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub(crate) fn norm(prec: u32, a: &[Float]) -> Float {
    dot(prec, a, a).sqrt()
}

/// `target -= factor * source`, elementwise.
pub(crate) fn axpy_sub(target: &mut [Float], factor: &Float, source: &[Float]) {
    for (t, s) in target.iter_mut().zip(source) {
        *t -= factor * s;
    }
}

/// Replace `rows` by `L^{-1} rows` for unit lower-triangular packed `l`.
pub(crate) fn forward_substitute_rows(l: &[Float], m: &mut FloatMatrix) {
    let n = m.n();
    for i in 1..n {
        let base = i * (i + 1) / 2;
        for k in 0..i {
            let lik = &l[base + k];
            if lik.is_zero() {
                continue;
            }
            let (target, source) = m.row_pair(i, k);
            axpy_sub(target, lik, source);
        }
    }
}

/// Solve `L^T x = z` in place for unit lower-triangular packed `l`.
pub(crate) fn back_substitute_transposed(l: &[Float], x: &mut [Float]) {
    let n = x.len();
    let mut t = Float::new(x.first().map_or(53, |v| v.prec()));
    for i in (0..n).rev() {
        for k in i + 1..n {
            let lki = &l[k * (k + 1) / 2 + i];
            if lki.is_zero() {
                continue;
            }
            t.assign(lki * &x[k]);
            x[i] -= &t;
        }
    }
}

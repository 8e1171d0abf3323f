//! Reduction of `(alpha^2 T1 + alpha V1) c = e S1 c` to a standard symmetric
//! problem and its solution in configurable-precision arithmetic.
//!
//! With the exact factorization `S1 = L D L^T`, the reduced matrix is
//! `M(alpha) = D^-1/2 L^-1 (alpha^2 T1 + alpha V1) L^-T D^-1/2` and the
//! generalized eigenvectors are `c = L^-T D^-1/2 y`. Because the reduction is
//! linear, `M(alpha) = alpha^2 M_T + alpha M_V` with both parts computed once
//! per basis and precision ([`ReducedPencil`]).

mod dense;
mod jacobi;
mod tridiag;

use std::fmt;

use nalgebra::DMatrix;
use rug::{Assign, Float, Rational};

pub use dense::FloatMatrix;
pub use jacobi::{default_tol, jacobi_eigen, jacobi_eigen_with, JacobiOptions, SymEigen};
pub use tridiag::Tridiagonal;

use crate::assembly::{ExactMatrixSet, TriMatrix};
use crate::basis::{BasisFunction, Parity};
use crate::error::{invalid, Result};
use dense::{back_substitute_transposed, dot, forward_substitute_rows, norm};

/// Significand width of the working floating-point format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Precision {
    bits: u32,
}

impl Precision {
    pub const MIN_BITS: u32 = 64;
    pub const DEFAULT_BITS: u32 = 256;

    pub fn new(bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return invalid(format!("precision must be at least {} bits, got {bits}", Self::MIN_BITS));
        }
        Ok(Precision { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn doubled(self) -> Self {
        Precision { bits: 2 * self.bits }
    }

    /// Decimal digits carried by the format.
    pub fn digits(self) -> f64 {
        self.bits as f64 * std::f64::consts::LOG10_2
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            bits: Self::DEFAULT_BITS,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.bits)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return invalid(format!("alpha must be positive and finite, got {alpha}"));
    }
    Ok(())
}

/// Eigenvalues and generalized eigenvectors at one `alpha`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub parity: Parity,
    pub k: u32,
    pub alpha: f64,
    /// Ascending.
    pub eigenvalues: Vec<Float>,
    /// `coefficients[n]` is the S1-normalized vector of state `n` over the
    /// unit-decay basis (see [`crate::WaveFunction::from_scaled`]).
    pub coefficients: Vec<Vec<Float>>,
    pub precision: Precision,
    /// Largest `||H c - e S1 c|| / ||S1 c||` over all columns.
    pub residual_bound: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues_f64(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.to_f64()).collect()
    }

    /// Number of bound (negative) eigenvalues.
    pub fn bound_count(&self) -> usize {
        self.eigenvalues.iter().filter(|e| e.is_sign_negative() && !e.is_zero()).count()
    }
}

/// The alpha-independent reduced matrices of one [`ExactMatrixSet`].
#[derive(Clone, Debug)]
pub struct ReducedPencil {
    pub parity: Parity,
    pub k: u32,
    pub basis: Vec<BasisFunction>,
    precision: Precision,
    kinetic: FloatMatrix,
    potential: FloatMatrix,
    l: Vec<Float>,
    d_inv_sqrt: Vec<Float>,
    s1: FloatMatrix,
    t1: FloatMatrix,
    v1: FloatMatrix,
}

fn rational_packed_to_float(m: &TriMatrix, prec: u32) -> Vec<Float> {
    let n = m.n();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            out.push(Float::with_val(prec, m.lower(i, j)));
        }
    }
    out
}

/// `D^-1/2 L^-1 A L^-T D^-1/2`, symmetrized.
fn congruence_by_factor(a: FloatMatrix, l: &[Float], d_inv_sqrt: &[Float]) -> FloatMatrix {
    let mut y = a;
    forward_substitute_rows(l, &mut y);
    let mut z = y.transpose();
    forward_substitute_rows(l, &mut z);
    let n = z.n();
    for i in 0..n {
        for (j, x) in z.row_mut(i).iter_mut().enumerate() {
            *x *= &d_inv_sqrt[i];
            *x *= &d_inv_sqrt[j];
        }
    }
    z.symmetrize();
    z
}

fn inv_sqrt_pivots(d: &[Rational], prec: u32) -> Vec<Float> {
    d.iter()
        .map(|x| {
            let mut f = Float::with_val(prec, x);
            f.recip_sqrt_mut();
            f
        })
        .collect()
}

/// `M(alpha)` for `(alpha^2 T1 + alpha V1, S1)`, built from the exact combination.
pub fn reduce(m: &ExactMatrixSet, alpha: f64, prec: Precision) -> Result<FloatMatrix> {
    check_alpha(alpha)?;
    let bits = prec.bits();
    let a = Rational::from_f64(alpha).expect("finite alpha");
    let a2 = Rational::from(a.square_ref());
    let n = m.len();
    let mut h = TriMatrix::zeros(n);
    let mut tmp = Rational::new();
    for i in 0..n {
        for j in 0..=i {
            let e = h.lower_mut(i, j);
            e.assign(m.t1.lower(i, j) * &a2);
            tmp.assign(m.v1.lower(i, j) * &a);
            *e += &tmp;
        }
    }
    let l = rational_packed_to_float(&m.l, bits);
    Ok(congruence_by_factor(
        FloatMatrix::from_symmetric(&h, bits),
        &l,
        &inv_sqrt_pivots(&m.d, bits),
    ))
}

impl ReducedPencil {
    pub fn new(m: &ExactMatrixSet, prec: Precision) -> Self {
        let bits = prec.bits();
        let l = rational_packed_to_float(&m.l, bits);
        let d_inv_sqrt = inv_sqrt_pivots(&m.d, bits);
        let t1 = FloatMatrix::from_symmetric(&m.t1, bits);
        let v1 = FloatMatrix::from_symmetric(&m.v1, bits);
        let kinetic = congruence_by_factor(t1.clone(), &l, &d_inv_sqrt);
        let potential = congruence_by_factor(v1.clone(), &l, &d_inv_sqrt);
        ReducedPencil {
            parity: m.parity,
            k: m.k,
            basis: m.basis.clone(),
            precision: prec,
            kinetic,
            potential,
            l,
            d_inv_sqrt,
            s1: FloatMatrix::from_symmetric(&m.s1, bits),
            t1,
            v1,
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    fn bits(&self) -> u32 {
        self.precision.bits()
    }

    /// Reduced kinetic part `M_T` and potential part `M_V`.
    pub fn parts(&self) -> (&FloatMatrix, &FloatMatrix) {
        (&self.kinetic, &self.potential)
    }

    /// `M_T` and `M_V` rounded to double precision.
    pub fn parts_f64(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.kinetic.to_f64(), self.potential.to_f64())
    }

    /// `M(alpha) = alpha^2 M_T + alpha M_V`.
    pub fn matrix_at(&self, alpha: f64) -> Result<FloatMatrix> {
        check_alpha(alpha)?;
        let a = Float::with_val(self.bits(), alpha);
        let inv = Float::with_val(self.bits(), a.recip_ref());
        let mut m = self.kinetic.add_scaled(&inv, &self.potential);
        m.scale(&Float::with_val(self.bits(), a.square_ref()));
        Ok(m)
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return invalid(format!("state index {} exceeds basis size {}", index + 1, self.len()));
        }
        Ok(())
    }

    /// The `index`-th (0-based) eigenvalue at `alpha`.
    pub fn eigenvalue(&self, alpha: f64, index: usize) -> Result<Float> {
        self.check_index(index)?;
        Tridiagonal::new(&self.matrix_at(alpha)?).eigenvalue(index)
    }

    /// The `index`-th eigenvalue and its S1-normalized coefficient vector.
    pub fn eigenpair(&self, alpha: f64, index: usize) -> Result<(Float, Vec<Float>)> {
        self.check_index(index)?;
        let t = Tridiagonal::new(&self.matrix_at(alpha)?);
        let e = t.eigenvalue(index)?;
        let y = t.eigenvector(&e);
        Ok((e, self.back_transform(&y)))
    }

    /// `c = L^-T D^-1/2 y`.
    pub fn back_transform(&self, y: &[Float]) -> Vec<Float> {
        let mut c: Vec<Float> = y.iter().zip(&self.d_inv_sqrt).map(|(a, b)| Float::with_val(self.bits(), a * b)).collect();
        back_substitute_transposed(&self.l, &mut c);
        c
    }

    /// `c1^T S1 c2`.
    pub fn overlap(&self, c1: &[Float], c2: &[Float]) -> Float {
        dot(self.bits(), c1, &self.s1.matvec(c2))
    }

    /// `(<c,T1 c>, <c,V1 c>, <c,S1 c>)`.
    pub fn expectations(&self, c: &[Float]) -> (Float, Float, Float) {
        let b = self.bits();
        (
            dot(b, c, &self.t1.matvec(c)),
            dot(b, c, &self.v1.matvec(c)),
            dot(b, c, &self.s1.matvec(c)),
        )
    }

    /// `|d e / d alpha|` from Hellmann-Feynman: `|2 alpha <T> + <V>| / <S>`.
    pub fn stationarity(&self, alpha: f64, c: &[Float]) -> Float {
        let (t, v, s) = self.expectations(c);
        let mut g = t * Float::with_val(self.bits(), 2.0 * alpha);
        g += &v;
        g /= &s;
        g.abs()
    }

    /// `||(alpha^2 T1 + alpha V1) c - e S1 c|| / ||S1 c||`.
    pub fn generalized_residual(&self, alpha: f64, e: &Float, c: &[Float]) -> Float {
        let b = self.bits();
        let a = Float::with_val(b, alpha);
        let a2 = Float::with_val(b, a.square_ref());
        let tc = self.t1.matvec(c);
        let vc = self.v1.matvec(c);
        let sc = self.s1.matvec(c);
        let r: Vec<Float> = tc
            .iter()
            .zip(&vc)
            .zip(&sc)
            .map(|((t, v), s)| {
                let mut x = Float::with_val(b, t * &a2);
                x += v * &a;
                x -= e * s;
                x
            })
            .collect();
        norm(b, &r) / norm(b, &sc)
    }

    /// Full spectrum by warm-started Jacobi on `M(alpha)`.
    pub fn spectrum(&self, alpha: f64) -> Result<Spectrum> {
        let m = self.matrix_at(alpha)?;
        let opts = JacobiOptions {
            warm_start: true,
            ..JacobiOptions::new(self.bits())
        };
        let eig = jacobi_eigen_with(&m, &opts)?;
        let n = self.len();
        let mut coefficients = Vec::with_capacity(n);
        let mut worst = Float::new(self.bits());
        for (j, e) in eig.values.iter().enumerate() {
            let y: Vec<Float> = (0..n).map(|i| eig.vectors.get(i, j).clone()).collect();
            let c = self.back_transform(&y);
            let r = self.generalized_residual(alpha, e, &c);
            if r > worst {
                worst = r;
            }
            coefficients.push(c);
        }
        Ok(Spectrum {
            parity: self.parity,
            k: self.k,
            alpha,
            eigenvalues: eig.values,
            coefficients,
            precision: self.precision,
            residual_bound: worst.to_f64(),
        })
    }
}

/// Eigenvalues and S1-normalized eigenvectors at `alpha`.
pub fn spectrum(m: &ExactMatrixSet, alpha: f64, prec: Precision) -> Result<Spectrum> {
    check_alpha(alpha)?;
    ReducedPencil::new(m, prec).spectrum(alpha)
}

/// Matching decimal digits of `a` and `b`, capped at the precision of the coarser.
pub fn agreement_digits(a: &Float, b: &Float) -> f64 {
    let prec = a.prec().min(b.prec());
    let cap = prec as f64 * std::f64::consts::LOG10_2;
    let diff = Float::with_val(prec.max(b.prec()), a - b).abs();
    if diff.is_zero() {
        return cap;
    }
    let scale = if a.is_zero() { Float::with_val(prec, 1) } else { a.clone().abs() };
    let rel = Float::with_val(prec, diff / scale);
    (-rel.log10().to_f64()).clamp(0.0, cap)
}

/// Spectrum at `prec` plus per-eigenvalue agreement digits against a rerun at
/// doubled precision.
pub fn verified_spectrum(m: &ExactMatrixSet, alpha: f64, prec: Precision) -> Result<(Spectrum, Vec<f64>)> {
    let base = spectrum(m, alpha, prec)?;
    let check = spectrum(m, alpha, prec.doubled())?;
    let digits = base
        .eigenvalues
        .iter()
        .zip(&check.eigenvalues)
        .map(|(a, b)| agreement_digits(a, b))
        .collect();
    Ok((base, digits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;

    fn f(x: &Float) -> f64 {
        x.to_f64()
    }

    #[test]
    fn precision_bounds() {
        assert!(Precision::new(63).is_err());
        assert_eq!(Precision::new(64).unwrap().bits(), 64);
        assert_eq!(Precision::default().bits(), 256);
        assert_eq!(Precision::default().doubled().bits(), 512);
    }

    #[test]
    fn single_function_reduces_to_rayleigh_quotient() {
        let m = assemble(Parity::Odd, 1).unwrap();
        let prec = Precision::default();
        for alpha in [0.25, 0.4, 1.0, 3.0] {
            let r = reduce(&m, alpha, prec).unwrap();
            let t = m.t1.lower(0, 0).to_f64();
            let v = m.v1.lower(0, 0).to_f64();
            let s = m.s1.lower(0, 0).to_f64();
            let expect = (alpha * alpha * t + alpha * v) / s;
            assert!((f(r.get(0, 0)) - expect).abs() < 1e-15 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn reduced_matrix_is_symmetric_and_matches_pencil() {
        let m = assemble(Parity::Even, 4).unwrap();
        let prec = Precision::new(192).unwrap();
        let direct = reduce(&m, 0.7, prec).unwrap();
        assert!(direct.max_asymmetry().is_zero());
        let via_pencil = ReducedPencil::new(&m, prec).matrix_at(0.7).unwrap();
        for i in 0..m.len() {
            for j in 0..m.len() {
                let d = Float::with_val(192, direct.get(i, j) - via_pencil.get(i, j)).abs();
                assert!(d < Float::with_val(192, 1) >> 170);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_alpha() {
        let m = assemble(Parity::Even, 2).unwrap();
        assert!(reduce(&m, 0.0, Precision::default()).is_err());
        assert!(spectrum(&m, -1.0, Precision::default()).is_err());
        let p = ReducedPencil::new(&m, Precision::default());
        assert!(p.eigenvalue(f64::NAN, 0).is_err());
        assert!(p.eigenvalue(1.0, 4).is_err());
    }

    #[test]
    fn eigenpair_agrees_with_full_spectrum() {
        let m = assemble(Parity::Even, 6).unwrap();
        let pencil = ReducedPencil::new(&m, Precision::default());
        let s = pencil.spectrum(1.3).unwrap();
        assert_eq!(s.len(), m.len());
        for idx in [0, 2, 5] {
            let (e, c) = pencil.eigenpair(1.3, idx).unwrap();
            assert!(agreement_digits(&e, &s.eigenvalues[idx]) > 60.0);
            // same vector up to sign
            let o = pencil.overlap(&c, &s.coefficients[idx]).abs();
            assert!((o.to_f64() - 1.0).abs() < 1e-40);
        }
        assert!(s.residual_bound < 1e-60);
    }

    #[test]
    fn variational_nesting_at_fixed_alpha() {
        let big = assemble(Parity::Even, 8).unwrap();
        let prec = Precision::new(128).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for k in 1..=8 {
            let s = spectrum(&big.truncate(k).unwrap(), 0.9, prec).unwrap();
            let vals = s.eigenvalues_f64();
            if let Some(p) = prev {
                for (a, b) in p.iter().zip(&vals) {
                    assert!(*b <= a + 1e-12, "K={k}: {b} > {a}");
                }
            }
            prev = Some(vals);
        }
    }

    #[test]
    fn agreement_digit_scale() {
        let a = Float::with_val(256, 1.0);
        let b = Float::with_val(256, 1.0 + 1e-10);
        let d = agreement_digits(&a, &b);
        assert!((d - 10.0).abs() < 0.1);
        assert!(agreement_digits(&a, &a) > 77.0);
    }
}

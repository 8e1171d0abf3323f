use nalgebra::SymmetricEigen;
use rug::ops::NegAssign;
use rug::{Assign, Float};

use super::dense::{axpy_sub, dot, FloatMatrix};
use crate::error::{invalid, Error, Result};

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<Float>,
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: FloatMatrix,
    pub sweeps: usize,
}

#[derive(Clone, Debug)]
pub struct JacobiOptions {
    /// Stop once `||offdiag||_F < tol * ||diag||_F`.
    pub tol: Float,
    pub max_sweeps: usize,
    /// Rotate into an orthonormalized double-precision eigenbasis first, leaving
    /// Jacobi only the last ~50 digits to clean up.
    pub warm_start: bool,
}

impl JacobiOptions {
    pub fn new(prec: u32) -> Self {
        JacobiOptions {
            tol: default_tol(prec),
            max_sweeps: 100,
            warm_start: false,
        }
    }
}

/// `2^-(bits - 16)`.
pub fn default_tol(prec: u32) -> Float {
    Float::with_val(prec, 1) >> (prec as i32 - 16)
}

/// Cyclic Jacobi with the matrix's own precision.
pub fn jacobi_eigen(m: &FloatMatrix, tol: &Float) -> Result<SymEigen> {
    let opts = JacobiOptions {
        tol: tol.clone(),
        ..JacobiOptions::new(m.prec())
    };
    jacobi_eigen_with(m, &opts)
}

pub fn jacobi_eigen_with(m: &FloatMatrix, opts: &JacobiOptions) -> Result<SymEigen> {
    if opts.tol <= 0 {
        return invalid("Jacobi tolerance must be positive");
    }
    let n = m.n();
    let prec = m.prec();
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: FloatMatrix::zeros(0, prec),
            sweeps: 0,
        });
    }
    let (mut a, basis_rows) = if opts.warm_start && n > 2 {
        let rows = warm_basis(m);
        (congruence(m, &rows), Some(rows))
    } else {
        (m.clone(), None)
    };
    let mut v = FloatMatrix::identity(n, prec);
    let sweeps = rotate_until_diagonal(&mut a, &mut v, opts)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(a.get(j, j)).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a.get(i, i).clone()).collect();

    let mut vectors = FloatMatrix::zeros(n, prec);
    match basis_rows {
        // x_i = sum_r v[r][i] * basis_rows[r]
        Some(rows) => {
            let mut col = vec![Float::new(prec); n];
            for (dst, &src) in order.iter().enumerate() {
                col.iter_mut().for_each(|c| c.assign(0));
                for r in 0..n {
                    let w = v.get(r, src);
                    for (c, b) in col.iter_mut().zip(rows.row(r)) {
                        *c += w * b;
                    }
                }
                for (i, c) in col.iter().enumerate() {
                    vectors.get_mut(i, dst).assign(c);
                }
            }
        }
        None => {
            for (dst, &src) in order.iter().enumerate() {
                for i in 0..n {
                    vectors.get_mut(i, dst).assign(v.get(i, src));
                }
            }
        }
    }
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

fn norms(a: &FloatMatrix) -> (Float, Float) {
    let prec = a.prec();
    let mut off = Float::new(prec);
    let mut diag = Float::new(prec);
    for i in 0..a.n() {
        for j in 0..a.n() {
            let x = a.get(i, j);
            if i == j {
                diag += x * x;
            } else {
                off += x * x;
            }
        }
    }
    (off.sqrt(), diag.sqrt())
}

fn rotate_until_diagonal(a: &mut FloatMatrix, v: &mut FloatMatrix, opts: &JacobiOptions) -> Result<usize> {
    let n = a.n();
    let prec = a.prec();
    let mut theta = Float::new(prec);
    let mut t = Float::new(prec);
    let mut c = Float::new(prec);
    let mut s = Float::new(prec);
    let mut tau = Float::new(prec);
    let mut diff = Float::new(prec);
    let mut g = Float::new(prec);
    let mut h = Float::new(prec);
    let mut u1 = Float::new(prec);
    let mut u2 = Float::new(prec);
    let mut limit = Float::new(prec);
    let negligible = Float::with_val(prec, 1) >> (prec as i32 + 4);

    for sweep in 0..=opts.max_sweeps {
        let (off, diag) = norms(a);
        limit.assign(&opts.tol * &diag);
        if off <= limit {
            return Ok(sweep);
        }
        if sweep == opts.max_sweeps {
            let residual = if diag.is_zero() { off } else { off / diag };
            return Err(Error::Convergence {
                method: "Jacobi",
                iterations: sweep,
                residual: residual.to_f64(),
            });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a.get(p, q).clone();
                if apq.is_zero() {
                    continue;
                }
                diff.assign(a.get(q, q) - a.get(p, p));
                // apq below rounding level of both diagonal entries: drop it
                g.assign(a.get(p, p).abs_ref());
                h.assign(a.get(q, q).abs_ref());
                if g < h {
                    g.assign(&h);
                }
                g *= &negligible;
                if apq.clone().abs() <= g {
                    a.get_mut(p, q).assign(0);
                    a.get_mut(q, p).assign(0);
                    continue;
                }
                theta.assign(&diff / &apq);
                theta /= 2;
                // t = sign(theta) / (|theta| + sqrt(theta^2 + 1))
                t.assign(theta.square_ref());
                t += 1;
                t.sqrt_mut();
                t += Float::with_val(t.prec(), theta.abs_ref());
                t.recip_mut();
                if theta.is_sign_negative() {
                    t.neg_assign();
                }
                c.assign(t.square_ref());
                c += 1;
                c.sqrt_mut();
                c.recip_mut();
                s.assign(&t * &c);
                tau.assign(&c + 1);
                tau.recip_mut();
                tau *= &s;

                g.assign(&t * &apq);
                *a.get_mut(p, p) -= &g;
                *a.get_mut(q, q) += &g;
                a.get_mut(p, q).assign(0);
                a.get_mut(q, p).assign(0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    g.assign(a.get(r, p));
                    h.assign(a.get(r, q));
                    rotate_pair(&mut g, &mut h, &s, &tau, &mut u1, &mut u2);
                    a.get_mut(r, p).assign(&g);
                    a.get_mut(p, r).assign(&g);
                    a.get_mut(r, q).assign(&h);
                    a.get_mut(q, r).assign(&h);
                }
                for r in 0..n {
                    g.assign(v.get(r, p));
                    h.assign(v.get(r, q));
                    rotate_pair(&mut g, &mut h, &s, &tau, &mut u1, &mut u2);
                    v.get_mut(r, p).assign(&g);
                    v.get_mut(r, q).assign(&h);
                }
            }
        }
    }
    unreachable!("loop returns on the final sweep")
}

/// `(g, h) <- (g - s (h + g tau), h + s (g - h tau))`.
#[inline]
fn rotate_pair(g: &mut Float, h: &mut Float, s: &Float, tau: &Float, u1: &mut Float, u2: &mut Float) {
    u1.assign(&*g * tau);
    *u1 += &*h;
    u2.assign(&*h * tau);
    *u2 -= &*g;
    *g -= s * &*u1;
    *h -= s * &*u2;
}

/// Rows of an orthonormal basis close to the eigenvectors of `m`.
fn warm_basis(m: &FloatMatrix) -> FloatMatrix {
    let n = m.n();
    let prec = m.prec();
    let eig = SymmetricEigen::new(m.to_f64());
    let mut rows = FloatMatrix::zeros(n, prec);
    for r in 0..n {
        for (k, x) in rows.row_mut(r).iter_mut().enumerate() {
            x.assign(eig.eigenvectors[(k, r)]);
        }
    }
    // modified Gram-Schmidt, twice for safety against the f64 starting error
    for _ in 0..2 {
        for r in 0..n {
            for s in 0..r {
                let (target, source) = rows.row_pair(r, s);
                let proj = dot(prec, target, source);
                axpy_sub(target, &proj, source);
            }
            let nrm = dot(prec, rows.row(r), rows.row(r)).sqrt();
            for x in rows.row_mut(r) {
                *x /= &nrm;
            }
        }
    }
    rows
}

/// `Q M Q^T` for orthonormal rows `Q`.
fn congruence(m: &FloatMatrix, q: &FloatMatrix) -> FloatMatrix {
    let n = m.n();
    let prec = m.prec();
    // w[r] = q[r] M
    let mut w = FloatMatrix::zeros(n, prec);
    for r in 0..n {
        let qr = q.row(r);
        let wr = w.row_mut(r);
        for (k, qk) in qr.iter().enumerate() {
            if qk.is_zero() {
                continue;
            }
            for (x, mk) in wr.iter_mut().zip(m.row(k)) {
                *x += qk * mk;
            }
        }
    }
    let mut out = FloatMatrix::zeros(n, prec);
    for r in 0..n {
        for s in 0..=r {
            let v = dot(prec, w.row(r), q.row(s));
            out.get_mut(s, r).assign(&v);
            *out.get_mut(r, s) = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, prec: u32, seed: u64) -> FloatMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vals = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                vals[i * n + j] = x;
                vals[j * n + i] = x;
            }
        }
        FloatMatrix::from_f64(n, prec, &vals)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    fn determinant(m: &FloatMatrix) -> Float {
        let n = m.n();
        let mut a = m.clone();
        let mut det = Float::with_val(m.prec(), 1);
        for c in 0..n {
            let piv = (c..n)
                .max_by(|&i, &j| a.get(i, c).clone().abs().partial_cmp(&a.get(j, c).clone().abs()).unwrap())
                .unwrap();
            if piv != c {
                for j in 0..n {
                    let x = a.get(c, j).clone();
                    let y = a.get(piv, j).clone();
                    *a.get_mut(c, j) = y;
                    *a.get_mut(piv, j) = x;
                }
                det.neg_assign();
            }
            let p = a.get(c, c).clone();
            det *= &p;
            for i in c + 1..n {
                let f = Float::with_val(m.prec(), a.get(i, c) / &p);
                for j in c..n {
                    let t = Float::with_val(m.prec(), &f * a.get(c, j));
                    *a.get_mut(i, j) -= t;
                }
            }
        }
        det
    }

    #[test]
    fn identity_and_swap() {
        let tol = default_tol(128);
        let e = jacobi_eigen(&FloatMatrix::identity(3, 128), &tol).unwrap();
        assert!(e.values.iter().all(|v| *v == 1));
        assert_eq!(e.sweeps, 0);
        let swap = FloatMatrix::from_f64(2, 128, &[0.0, 1.0, 1.0, 0.0]);
        let e = jacobi_eigen(&swap, &tol).unwrap();
        assert_eq!(e.values[0], -1);
        assert_eq!(e.values[1], 1);
    }

    #[test]
    fn trace_and_determinant_identities() {
        let prec = 192;
        let m = random_symmetric(8, prec, 7);
        let tol = default_tol(prec);
        for warm in [false, true] {
            let opts = JacobiOptions {
                warm_start: warm,
                ..JacobiOptions::new(prec)
            };
            let e = jacobi_eigen_with(&m, &opts).unwrap();
            let sum = e.values.iter().fold(Float::new(prec), |acc, v| acc + v);
            let prod = e.values.iter().fold(Float::with_val(prec, 1), |acc, v| acc * v);
            let dsum = Float::with_val(prec, &sum - &m.trace()).abs();
            let dprod = Float::with_val(prec, &prod - &determinant(&m)).abs();
            assert!(dsum < tol, "trace mismatch {dsum}");
            assert!(dprod < tol, "determinant mismatch {dprod}");
            for w in e.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_satisfy_the_equation() {
        let prec = 256;
        let m = random_symmetric(12, prec, 11);
        let tol = default_tol(prec);
        let bound = Float::with_val(prec, &tol * 64);
        for warm in [false, true] {
            let opts = JacobiOptions {
                warm_start: warm,
                ..JacobiOptions::new(prec)
            };
            let e = jacobi_eigen_with(&m, &opts).unwrap();
            let cols: Vec<Vec<Float>> = (0..12)
                .map(|j| (0..12).map(|i| e.vectors.get(i, j).clone()).collect())
                .collect();
            for i in 0..12 {
                for j in 0..12 {
                    let d: Float = dot(prec, &cols[i], &cols[j]) - if i == j { 1 } else { 0 };
                    assert!(d.abs() < bound);
                }
                let mv = m.matvec(&cols[i]);
                for (a, x) in mv.iter().zip(&cols[i]) {
                    let r = Float::with_val(prec, a - &e.values[i] * x).abs();
                    assert!(r < bound);
                }
            }
        }
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let prec = 200;
        let m = random_symmetric(10, prec, 3);
        let cold = jacobi_eigen(&m, &default_tol(prec)).unwrap();
        let warm = jacobi_eigen_with(
            &m,
            &JacobiOptions {
                warm_start: true,
                ..JacobiOptions::new(prec)
            },
        )
        .unwrap();
        assert!(warm.sweeps < cold.sweeps);
        for (a, b) in cold.values.iter().zip(&warm.values) {
            assert!(Float::with_val(prec, a - b).abs() < default_tol(prec));
        }
    }

    #[test]
    fn sweep_limit_reports_convergence_error() {
        let m = random_symmetric(6, 128, 5);
        let opts = JacobiOptions {
            max_sweeps: 1,
            ..JacobiOptions::new(128)
        };
        assert!(matches!(jacobi_eigen_with(&m, &opts), Err(Error::Convergence { .. })));
        assert!(jacobi_eigen(&m, &Float::new(128)).is_err());
    }
}

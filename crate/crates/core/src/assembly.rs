//! Exact overlap, kinetic and potential matrices at unit decay constant.
//!
//! All elements are computed with `alpha = 1` and `pi` divided out. For a basis
//! function with radial power `p`, substituting `r -> r / alpha` gives the
//! matrices at any `alpha` as `Delta (alpha^2 T1 | alpha V1 | S1) Delta`,
//! `Delta = diag(alpha^-(p+1))`. The congruence by `Delta` leaves the generalized
//! spectrum unchanged, so only `alpha^2 T1 + alpha V1` against `S1` is ever solved.

use rug::{Assign, Rational};

use crate::basis::{basis_size, enumerate_basis, BasisFunction, Parity};
use crate::error::{invalid, Error, Result};
use crate::integrals::MomentTable;

/// Square matrix of rationals with row-major packed lower-triangle storage.
///
/// Used both for symmetric matrices (read with [`TriMatrix::sym`]) and for
/// lower-triangular ones (read with [`TriMatrix::lower`]). The leading
/// `m x m` block is a prefix of the storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriMatrix {
    n: usize,
    data: Vec<Rational>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

impl TriMatrix {
    pub fn zeros(n: usize) -> Self {
        TriMatrix {
            n,
            data: vec![Rational::new(); n * (n + 1) / 2],
        }
    }

    pub(crate) fn from_packed(n: usize, data: Vec<Rational>) -> Self {
        debug_assert_eq!(data.len(), n * (n + 1) / 2);
        TriMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)` with `j <= i`.
    pub fn lower(&self, i: usize, j: usize) -> &Rational {
        debug_assert!(j <= i && i < self.n);
        &self.data[packed(i, j)]
    }

    pub fn lower_mut(&mut self, i: usize, j: usize) -> &mut Rational {
        debug_assert!(j <= i && i < self.n);
        &mut self.data[packed(i, j)]
    }

    /// Entry `(i, j)` of the symmetric matrix.
    pub fn sym(&self, i: usize, j: usize) -> &Rational {
        if j <= i {
            self.lower(i, j)
        } else {
            self.lower(j, i)
        }
    }

    /// Leading principal `m x m` block.
    pub fn leading(&self, m: usize) -> TriMatrix {
        assert!(m <= self.n);
        TriMatrix {
            n: m,
            data: self.data[..m * (m + 1) / 2].to_vec(),
        }
    }
}

/// The alpha-independent exact matrices for one parity and basis level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMatrixSet {
    pub parity: Parity,
    /// Basis level the matrices were built (or truncated) from.
    pub k: u32,
    pub basis: Vec<BasisFunction>,
    pub s1: TriMatrix,
    pub t1: TriMatrix,
    pub v1: TriMatrix,
    /// Unit lower-triangular factor of `s1`.
    pub l: TriMatrix,
    /// Positive pivots of `s1 = L D L^T`.
    pub d: Vec<Rational>,
}

impl ExactMatrixSet {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// The set restricted to the first `m` basis functions. The LDL^T factors of a
    /// leading block are the leading blocks of the factors.
    pub fn leading(&self, m: usize) -> Result<ExactMatrixSet> {
        if m == 0 || m > self.len() {
            return invalid(format!(
                "cannot take {m} leading functions of a {}-function basis",
                self.len()
            ));
        }
        let k = self.basis[..m].iter().map(|b| b.level()).max().unwrap_or(0).max(1);
        Ok(ExactMatrixSet {
            parity: self.parity,
            k,
            basis: self.basis[..m].to_vec(),
            s1: self.s1.leading(m),
            t1: self.t1.leading(m),
            v1: self.v1.leading(m),
            l: self.l.leading(m),
            d: self.d[..m].to_vec(),
        })
    }

    /// The set for a lower basis level `k` (a prefix, by nesting).
    pub fn truncate(&self, k: u32) -> Result<ExactMatrixSet> {
        if k > self.k {
            return invalid(format!("cannot truncate level {} up to {k}", self.k));
        }
        let mut out = self.leading(basis_size(self.parity, k)?)?;
        out.k = k;
        Ok(out)
    }

    /// `L D L^T` rebuilt from the factors.
    pub fn reconstruct_overlap(&self) -> TriMatrix {
        let n = self.len();
        let mut out = TriMatrix::zeros(n);
        let mut term = Rational::new();
        for i in 0..n {
            for j in 0..=i {
                let acc = out.lower_mut(i, j);
                for c in 0..=j {
                    term.assign(self.l.lower(i, c) * self.l.lower(j, c));
                    term *= &self.d[c];
                    *acc += &term;
                }
            }
        }
        out
    }
}

fn check_pair(a: &BasisFunction, b: &BasisFunction) -> Result<()> {
    if a.parity != b.parity {
        return invalid(format!("mixed parity pair ({a}, {b})"));
    }
    Ok(())
}

fn table_for(a: &BasisFunction, b: &BasisFunction) -> MomentTable {
    MomentTable::new(a.p + b.p + 1, a.j + b.j + 2)
}

/// Angular moment of `f_a f_b cos^extra` where `f` carries `sin` for odd parity.
fn angular(t: &MomentTable, parity: Parity, m: u32) -> Rational {
    match parity {
        Parity::Even => t.cos(m).clone(),
        Parity::Odd => t.cos_sin2(m),
    }
}

fn overlap_with(t: &MomentTable, a: &BasisFunction, b: &BasisFunction) -> Rational {
    angular(t, a.parity, a.j + b.j) * t.radial(a.p + b.p + 1)
}

fn potential_with(t: &MomentTable, a: &BasisFunction, b: &BasisFunction) -> Rational {
    angular(t, a.parity, a.j + b.j + 1) * t.radial(a.p + b.p)
}

fn kinetic_with(t: &MomentTable, a: &BasisFunction, b: &BasisFunction) -> Rational {
    let s = a.p + b.p;
    // d/dr (r^p e^-r) = (p r^{p-1} - r^p) e^-r
    let mut radial = t.radial(s + 1) - Rational::from(t.radial(s) * s);
    if a.p > 0 && b.p > 0 {
        radial += Rational::from(t.radial(s - 1) * (a.p * b.p));
    }
    let mut out = radial * angular(t, a.parity, a.j + b.j);

    let (ja, jb) = (a.j, b.j);
    let angular_part = match a.parity {
        // d/dt cos^j = -j cos^{j-1} sin
        Parity::Even => {
            if ja > 0 && jb > 0 {
                t.cos_sin2(ja + jb - 2) * (ja * jb)
            } else {
                Rational::new()
            }
        }
        // d/dt (sin cos^j) = (j+1) cos^{j+1} - j cos^{j-1}
        Parity::Odd => {
            let mut acc = Rational::from(t.cos(ja + jb + 2) * ((ja + 1) * (jb + 1)));
            acc -= Rational::from(t.cos(ja + jb) * ((ja + 1) * jb + ja * (jb + 1)));
            if ja > 0 && jb > 0 {
                acc += Rational::from(t.cos(ja + jb - 2) * (ja * jb));
            }
            acc
        }
    };
    if angular_part != 0 {
        out += angular_part * t.radial(s - 1);
    }
    out
}

/// `<a|b>` at unit decay constant, `pi` divided out.
pub fn overlap_entry(a: &BasisFunction, b: &BasisFunction) -> Result<Rational> {
    check_pair(a, b)?;
    Ok(overlap_with(&table_for(a, b), a, b))
}

/// `<grad a|grad b>` at unit decay constant, `pi` divided out.
pub fn kinetic_entry(a: &BasisFunction, b: &BasisFunction) -> Result<Rational> {
    check_pair(a, b)?;
    Ok(kinetic_with(&table_for(a, b), a, b))
}

/// `<a|cos(t)/r|b>` at unit decay constant, `pi` divided out.
pub fn potential_entry(a: &BasisFunction, b: &BasisFunction) -> Result<Rational> {
    check_pair(a, b)?;
    Ok(potential_with(&table_for(a, b), a, b))
}

/// Exact `A = L D L^T` by Gaussian elimination without pivoting.
///
/// Fails with [`Error::Internal`] on a nonpositive pivot.
pub fn ldlt(a: &TriMatrix) -> Result<(TriMatrix, Vec<Rational>)> {
    let n = a.n();
    let mut work = a.clone();
    let mut l = TriMatrix::zeros(n);
    let mut d = Vec::with_capacity(n);
    let mut column: Vec<Rational> = Vec::with_capacity(n);
    let mut tmp = Rational::new();
    for c in 0..n {
        let pivot = work.lower(c, c).clone();
        if pivot <= 0 {
            return Err(Error::Internal(format!(
                "nonpositive pivot {pivot} at index {c} of a {n}x{n} LDL^T"
            )));
        }
        column.clear();
        column.extend((c + 1..n).map(|i| work.lower(i, c).clone()));
        l.lower_mut(c, c).assign(1);
        for (off, w) in column.iter().enumerate() {
            l.lower_mut(c + 1 + off, c).assign(w / &pivot);
        }
        for i in c + 1..n {
            let li = l.lower(i, c).clone();
            if li == 0 {
                continue;
            }
            for j in c + 1..=i {
                let wj = &column[j - c - 1];
                if *wj == 0 {
                    continue;
                }
                tmp.assign(&li * wj);
                *work.lower_mut(i, j) -= &tmp;
            }
        }
        d.push(pivot);
    }
    Ok((l, d))
}

/// Build the exact matrices and the LDL^T factors of the overlap.
pub fn assemble(parity: Parity, k: u32) -> Result<ExactMatrixSet> {
    let basis = enumerate_basis(parity, k)?;
    let n = basis.len();
    let table = MomentTable::new(2 * k + 1, 2 * k + 2);
    let mut s1 = TriMatrix::zeros(n);
    let mut t1 = TriMatrix::zeros(n);
    let mut v1 = TriMatrix::zeros(n);
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis[..=i].iter().enumerate() {
            *s1.lower_mut(i, j) = overlap_with(&table, a, b);
            *t1.lower_mut(i, j) = kinetic_with(&table, a, b);
            *v1.lower_mut(i, j) = potential_with(&table, a, b);
        }
    }
    let (l, d) = ldlt(&s1)?;
    Ok(ExactMatrixSet {
        parity,
        k,
        basis,
        s1,
        t1,
        v1,
        l,
        d,
    })
}

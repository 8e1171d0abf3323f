//! Per-state optimization of the decay constant `alpha`.
//!
//! The objective is the `n`-th sorted eigenvalue `e_n(alpha)`. A log-spaced
//! scan in double precision locates the basin, a double-precision Brent search
//! narrows it, and a final Brent search at working precision pins `alpha*`.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rug::Float;

use crate::assembly::ExactMatrixSet;
use crate::basis::Parity;
use crate::eigen::{Precision, ReducedPencil};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug)]
pub struct OptOptions {
    pub precision: Precision,
    /// Relative width of the final `alpha` interval.
    pub tol: f64,
    /// Points in the coarse double-precision scan.
    pub scan_points: usize,
    /// Bracket widenings (by a factor 4 on each side) before giving up.
    pub max_widenings: u32,
}

impl Default for OptOptions {
    fn default() -> Self {
        OptOptions { precision: Precision::default(), tol: 1e-6, scan_points: 48, max_widenings: 4 }
    }
}

impl OptOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 0.1) {
            return invalid(format!("tolerance must lie in (0, 0.1), got {}", self.tol));
        }
        if self.scan_points < 5 {
            return invalid("coarse scan needs at least 5 points");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OptResult {
    /// 1-based index within the parity family.
    pub state_index: usize,
    pub alpha_star: f64,
    pub epsilon: Float,
    /// `|2 alpha <T1> + <V1>| / <S1>` at `alpha_star`.
    pub stationarity: f64,
    /// Working-precision eigenvalue evaluations.
    pub evaluations: usize,
    /// S1-normalized coefficients in the scaled basis at `alpha_star`.
    pub coefficients: Vec<Float>,
}

impl OptResult {
    pub fn epsilon_f64(&self) -> f64 {
        self.epsilon.to_f64()
    }
}

/// Default search bracket for a parity family.
pub fn default_bracket(parity: Parity) -> (f64, f64) {
    match parity {
        Parity::Even => (0.01, 5.0),
        Parity::Odd => (0.01, 2.0),
    }
}

/// Memoized `e_n(alpha)` at working precision.
struct Objective<'a> {
    pencil: &'a ReducedPencil,
    index: usize,
    memo: HashMap<u64, Float>,
}

impl<'a> Objective<'a> {
    fn eval(&mut self, alpha: f64) -> Result<f64> {
        if let Some(v) = self.memo.get(&alpha.to_bits()) {
            return Ok(v.to_f64());
        }
        let v = self.pencil.eigenvalue(alpha, self.index)?;
        let out = v.to_f64();
        self.memo.insert(alpha.to_bits(), v);
        Ok(out)
    }
}

fn nth_eigenvalue_f64(mt: &DMatrix<f64>, mv: &DMatrix<f64>, alpha: f64, index: usize) -> f64 {
    let m = mt * (alpha * alpha) + mv * alpha;
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values[index]
}

/// Brent's minimizer (golden section with safeguarded parabolic steps) on
/// `[a, b]`, stopping when the bracket is below `tol * |x|`.
fn brent<F>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    const ZEPS: f64 = 1e-14;
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + ZEPS;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if !(p.abs() >= (0.5 * q * etemp).abs() || p <= q * (a - x) || p >= q * (b - x)) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Err(Error::Convergence { method: "Brent minimization", iterations: max_iter, residual: b - a })
}

fn check_state(len: usize, n: usize) -> Result<usize> {
    if n == 0 || n > len {
        return invalid(format!("state index {n} outside 1..={len}"));
    }
    Ok(n - 1)
}

fn check_bracket(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return invalid(format!("alpha bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
    }
    Ok(())
}

/// Minimizes `e_n(alpha)` over `[lo, hi]` for an already reduced pencil.
///
/// Fails with [`Error::BracketExhausted`] when the minimum sits on an edge.
pub fn optimize_pencil(pencil: &ReducedPencil, n: usize, bracket: (f64, f64), opts: &OptOptions) -> Result<OptResult> {
    opts.validate()?;
    let (lo, hi) = bracket;
    check_bracket(lo, hi)?;
    let index = check_state(pencil.len(), n)?;
    let exhausted = |alpha: f64| Error::BracketExhausted {
        state: n,
        lo,
        hi,
        alpha,
    };

    // Coarse log-spaced scan in double precision.
    let (mt, mv) = pencil.parts_f64();
    let g = opts.scan_points;
    let ratio = (hi / lo).ln();
    let grid: Vec<f64> = (0..g).map(|i| lo * (ratio * i as f64 / (g - 1) as f64).exp()).collect();
    let values: Vec<f64> = grid.iter().map(|&a| nth_eigenvalue_f64(&mt, &mv, a, index)).collect();
    let best = (0..g).min_by(|&i, &j| values[i].total_cmp(&values[j])).expect("nonempty scan");
    if best == 0 || best == g - 1 {
        return Err(exhausted(grid[best]));
    }
    let (coarse_lo, coarse_hi) = (grid[best - 1], grid[best + 1]);

    // Double-precision refinement; its accuracy is limited by rounding in M(alpha).
    let (alpha64, _) = brent(|a| Ok(nth_eigenvalue_f64(&mt, &mv, a, index)), coarse_lo, coarse_hi, 1e-8, 200)?;

    let mut objective = Objective { pencil, index, memo: HashMap::new() };
    let narrow = (alpha64 * (1.0 - 2e-3)).max(coarse_lo);
    let narrow_hi = (alpha64 * (1.0 + 2e-3)).min(coarse_hi);
    let mut search = (narrow, narrow_hi);
    let alpha_star = loop {
        let (a, _) = brent(|a| objective.eval(a), search.0, search.1, opts.tol, 200)?;
        let at_edge = a - search.0 <= 4.0 * opts.tol * a || search.1 - a <= 4.0 * opts.tol * a;
        if !at_edge {
            break a;
        }
        if search == (coarse_lo, coarse_hi) {
            return Err(exhausted(a));
        }
        search = (coarse_lo, coarse_hi);
    };

    let (epsilon, coefficients) = pencil.eigenpair(alpha_star, index)?;
    let stationarity = pencil.stationarity(alpha_star, &coefficients).to_f64();
    Ok(OptResult {
        state_index: n,
        alpha_star,
        epsilon,
        stationarity,
        evaluations: objective.memo.len() + 1,
        coefficients,
    })
}

/// Minimizes `e_n(alpha)` over `[lo, hi]`.
pub fn optimize_alpha(m: &ExactMatrixSet, n: usize, bracket: (f64, f64), opts: &OptOptions) -> Result<OptResult> {
    check_bracket(bracket.0, bracket.1)?;
    check_state(m.len(), n)?;
    optimize_pencil(&ReducedPencil::new(m, opts.precision), n, bracket, opts)
}

/// Like [`optimize_pencil`], widening the bracket by 4x on each side whenever
/// the minimum lands on an edge.
pub fn optimize_widening(pencil: &ReducedPencil, n: usize, bracket: (f64, f64), opts: &OptOptions) -> Result<OptResult> {
    let mut bracket = bracket;
    let mut tries = 0;
    loop {
        match optimize_pencil(pencil, n, bracket, opts) {
            Err(Error::BracketExhausted { .. }) if tries < opts.max_widenings => {
                bracket = (bracket.0 / 4.0, bracket.1 * 4.0);
                tries += 1;
            }
            other => return other,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub k: u32,
    pub basis_size: usize,
    pub alpha_star: f64,
    pub epsilon: Float,
    pub stationarity: f64,
}

/// Optimizes state `n` at every level in `ks` (ascending, each `<= top.k`),
/// using nested truncations of `top` and warm-starting each bracket at the
/// previous optimum.
pub fn k_sweep(top: &ExactMatrixSet, n: usize, ks: &[u32], opts: &OptOptions) -> Result<Vec<SweepRow>> {
    if ks.is_empty() {
        return invalid("empty K list");
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("K list must be strictly ascending");
    }
    if ks[0] == 0 || *ks.last().unwrap() > top.k {
        return invalid(format!("K list must lie in 1..={}", top.k));
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(ks.len());
    let mut bracket = default_bracket(top.parity);
    for &k in ks {
        let m = top.truncate(k)?;
        check_state(m.len(), n)?;
        let pencil = ReducedPencil::new(&m, opts.precision);
        let r = optimize_widening(&pencil, n, bracket, opts)?;
        bracket = (r.alpha_star / 3.0, r.alpha_star * 3.0);
        rows.push(SweepRow {
            k,
            basis_size: m.len(),
            alpha_star: r.alpha_star,
            epsilon: r.epsilon,
            stationarity: r.stationarity,
        });
    }
    Ok(rows)
}

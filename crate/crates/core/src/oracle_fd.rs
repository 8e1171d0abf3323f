//! Finite-difference cross-check: the 5-point Laplacian plus `x/(x^2+y^2)` on a
//! square box with Dirichlet walls, solved by Lanczos in double precision.
//!
//! The grid has an even number of interior points per axis, so the nodes sit
//! half a cell away from the origin and the potential is finite everywhere.
//! Lanczos runs without reorthogonalization; spurious Ritz values are removed
//! with the Cullum-Willoughby test against the tridiagonal matrix with its
//! first row and column deleted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug)]
pub struct FdConfig {
    /// Box half-width `L`; the domain is `[-L, L]^2`.
    pub half_width: f64,
    /// Interior grid points per axis (even, at least 16).
    pub points: usize,
    pub eigen_count: usize,
    /// Include the dipole potential; off gives the particle in a box.
    pub potential: bool,
    pub max_steps: usize,
    /// Absolute change between checkpoints accepted as converged.
    pub tol: f64,
}

impl FdConfig {
    pub fn new(half_width: f64, points: usize, eigen_count: usize) -> Result<Self> {
        let cfg = FdConfig { half_width, points, eigen_count, potential: true, max_steps: 20_000, tol: 1e-10 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return invalid(format!("box half-width must be positive, got {}", self.half_width));
        }
        if self.points < 16 || !self.points.is_multiple_of(2) {
            return invalid(format!("grid points per axis must be even and >= 16, got {}", self.points));
        }
        if self.eigen_count == 0 {
            return invalid("eigen_count must be positive");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return invalid("tolerance must be positive");
        }
        Ok(())
    }

    /// Grid spacing `h = 2L / (M + 1)`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points + 1) as f64
    }

    /// Coordinate of interior node `i` (0-based).
    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.spacing()
    }
}

struct Operator {
    m: usize,
    inv_h2: f64,
    diag: Vec<f64>,
}

impl Operator {
    fn new(cfg: &FdConfig) -> Self {
        let m = cfg.points;
        let h = cfg.spacing();
        let inv_h2 = 1.0 / (h * h);
        let mut diag = Vec::with_capacity(m * m);
        for iy in 0..m {
            let y = cfg.node(iy);
            for ix in 0..m {
                let x = cfg.node(ix);
                let v = if cfg.potential { x / (x * x + y * y) } else { 0.0 };
                diag.push(4.0 * inv_h2 + v);
            }
        }
        Operator { m, inv_h2, diag }
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let m = self.m;
        for iy in 0..m {
            for ix in 0..m {
                let k = iy * m + ix;
                let mut nb = 0.0;
                if ix > 0 {
                    nb += u[k - 1];
                }
                if ix + 1 < m {
                    nb += u[k + 1];
                }
                if iy > 0 {
                    nb += u[k - m];
                }
                if iy + 1 < m {
                    nb += u[k + m];
                }
                out[k] = self.diag[k] * u[k] - self.inv_h2 * nb;
            }
        }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(a, b)` below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..a.len() {
        let off = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
        d = a[i] - x - if i > 0 { off / d } else { 0.0 };
        if d == 0.0 {
            d = -f64::EPSILON * (a[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `index`-th smallest eigenvalue of `(a, b)` by bisection.
fn tridiag_eigenvalue(a: &[f64], b: &[f64], index: usize) -> f64 {
    let n = a.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < n { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, b, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Lowest `count` Ritz values of `T_k` that pass the Cullum-Willoughby test.
fn genuine_ritz_values(a: &[f64], b: &[f64], count: usize, tol: f64) -> Vec<f64> {
    let k = a.len();
    let wanted = (3 * count + 10).min(k);
    let raw: Vec<f64> = (0..wanted).map(|i| tridiag_eigenvalue(a, b, i)).collect();
    let scale = raw.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let cluster = 1e-10 * scale;
    let (ah, bh) = (&a[1..], if b.len() > 1 { &b[1..] } else { &b[..0] });
    let mut out = Vec::new();
    let mut i = 0;
    while i < raw.len() && out.len() < count {
        let mut j = i + 1;
        while j < raw.len() && raw[j] - raw[i] <= cluster {
            j += 1;
        }
        let lambda = raw[i];
        // A simple Ritz value shared with the deleted matrix is a ghost.
        let single = j - i == 1;
        let window = tol.max(cluster);
        let spurious = single
            && k > 1
            && sturm_count(ah, bh, lambda + window) > sturm_count(ah, bh, lambda - window);
        if !spurious {
            out.push(lambda);
        }
        i = j;
    }
    out
}

/// Lowest `cfg.eigen_count` distinct eigenvalues of the discretized operator,
/// ascending. Exactly degenerate levels are reported once.
pub fn fd_spectrum(cfg: &FdConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let op = Operator::new(cfg);
    let n = op.m * op.m;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut v_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    let mut last_change = f64::INFINITY;
    let checkpoint = 50;

    for step in 0..cfg.max_steps.min(n) {
        op.apply(&v, &mut w);
        if let Some(&beta) = betas.last() {
            w.iter_mut().zip(&v_prev).for_each(|(x, p)| *x -= beta * p);
        }
        let alpha: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        w.iter_mut().zip(&v).for_each(|(x, y)| *x -= alpha * y);
        alphas.push(alpha);
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let exhausted = beta <= 1e-14 * alpha.abs().max(1.0);
        if (step + 1) % checkpoint == 0 || exhausted {
            let current = genuine_ritz_values(&alphas, &betas, cfg.eigen_count, cfg.tol);
            if let Some(prev) = &previous {
                if prev.len() == current.len() && current.len() == cfg.eigen_count {
                    last_change = prev.iter().zip(&current).map(|(p, c)| (p - c).abs()).fold(0.0, f64::max);
                    if last_change <= cfg.tol {
                        return Ok(current);
                    }
                }
            }
            if exhausted {
                if current.len() == cfg.eigen_count {
                    return Ok(current);
                }
                return invalid(format!(
                    "Krylov space exhausted after {} steps with {} of {} eigenvalues",
                    step + 1,
                    current.len(),
                    cfg.eigen_count
                ));
            }
            previous = Some(current);
        }
        betas.push(beta);
        std::mem::swap(&mut v_prev, &mut v);
        v.iter_mut().zip(&w).for_each(|(x, y)| *x = y / beta);
    }
    Err(Error::Convergence { method: "Lanczos", iterations: cfg.max_steps, residual: last_change })
}

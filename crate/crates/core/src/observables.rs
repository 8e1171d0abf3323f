//! Wavefunctions, densities, the quartic coupling constant and unit conversion.

use rug::ops::Pow;
use rug::{Assign, Float};

use crate::assembly::ExactMatrixSet;
use crate::basis::{BasisFunction, Parity};
use crate::eigen::FloatMatrix;
use crate::error::{invalid, Result};
use crate::quadrature::gauss_laguerre;

/// `psi = sum_m a_m phi_m(alpha)` with coefficients in the physical basis.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    basis: Vec<BasisFunction>,
    alpha: f64,
    coefficients: Vec<Float>,
    normalized: bool,
}

impl WaveFunction {
    pub fn new(basis: Vec<BasisFunction>, alpha: f64, coefficients: Vec<Float>) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("alpha must be positive and finite, got {alpha}"));
        }
        if basis.len() != coefficients.len() {
            return invalid(format!(
                "{} coefficients for a basis of {} functions",
                coefficients.len(),
                basis.len()
            ));
        }
        if basis.is_empty() {
            return invalid("empty basis");
        }
        if basis.iter().any(|b| b.parity != basis[0].parity) {
            return invalid("basis mixes parities");
        }
        Ok(WaveFunction { basis, alpha, coefficients, normalized: false })
    }

    /// From coefficients `c` of the unit-decay (scaled) basis: `a_m = c_m alpha^(p+1)`.
    pub fn from_scaled(basis: Vec<BasisFunction>, alpha: f64, c: &[Float]) -> Result<Self> {
        let mut w = WaveFunction::new(basis, alpha, c.to_vec())?;
        for (a, b) in w.coefficients.iter_mut().zip(&w.basis) {
            *a *= Float::with_val(a.prec(), alpha).pow(b.p as i32 + 1);
        }
        Ok(w)
    }

    pub fn basis(&self) -> &[BasisFunction] {
        &self.basis
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coefficients(&self) -> &[Float] {
        &self.coefficients
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn parity(&self) -> Parity {
        self.basis[0].parity
    }

    fn prec(&self) -> u32 {
        self.coefficients.iter().map(|c| c.prec()).max().unwrap_or(64)
    }

    fn max_power(&self) -> (u32, u32) {
        let p = self.basis.iter().map(|b| b.p).max().unwrap_or(0);
        let j = self.basis.iter().map(|b| b.j).max().unwrap_or(0);
        (p, j)
    }

    /// Coefficients of the scaled basis, `c_m = a_m alpha^-(p+1)`.
    pub fn scaled_coefficients(&self) -> Vec<Float> {
        self.coefficients
            .iter()
            .zip(&self.basis)
            .map(|(a, b)| a.clone() * Float::with_val(a.prec(), self.alpha).pow(-(b.p as i32 + 1)))
            .collect()
    }

    /// Polynomial part `Q(r, t) = sum_m a_m r^p cos^j t (sin t)`, so that
    /// `psi = Q e^{-alpha r}`.
    fn polynomial(&self, r: &Float, theta: &Float) -> Float {
        let prec = r.prec();
        let (pmax, jmax) = self.max_power();
        let (sin, cos) = theta.clone().sin_cos(Float::new(prec));
        let rp = powers(r, pmax);
        let cj = powers(&cos, jmax);
        let mut q = Float::new(prec);
        let mut term = Float::new(prec);
        for (a, b) in self.coefficients.iter().zip(&self.basis) {
            term.assign(&rp[b.p as usize] * &cj[b.j as usize]);
            term *= a;
            q += &term;
        }
        if self.parity() == Parity::Odd {
            q *= &sin;
        }
        q
    }

    /// `psi(r, theta)` at the working precision of the coefficients.
    pub fn eval(&self, r: f64, theta: f64) -> Float {
        let prec = self.prec();
        let rr = Float::with_val(prec, r);
        let mut q = self.polynomial(&rr, &Float::with_val(prec, theta));
        let mut decay = Float::with_val(prec, -self.alpha);
        decay *= &rr;
        decay.exp_mut();
        q *= &decay;
        q
    }

    pub fn eval_f64(&self, r: f64, theta: f64) -> f64 {
        self.eval(r, theta).to_f64()
    }
}

fn powers(x: &Float, max: u32) -> Vec<Float> {
    let mut out = Vec::with_capacity(max as usize + 1);
    out.push(Float::with_val(x.prec(), 1));
    for k in 1..=max as usize {
        let next = Float::with_val(x.prec(), &out[k - 1] * x);
        out.push(next);
    }
    out
}

fn check_consistent(w: &WaveFunction, m: &ExactMatrixSet) -> Result<()> {
    if w.basis != m.basis {
        return invalid("wavefunction basis does not match the matrix set");
    }
    Ok(())
}

/// `<psi|psi> = pi c^T S1 c` with `c` the scaled coefficients.
pub fn norm_squared(w: &WaveFunction, m: &ExactMatrixSet) -> Result<Float> {
    check_consistent(w, m)?;
    let prec = w.prec();
    let c = w.scaled_coefficients();
    let s1 = FloatMatrix::from_symmetric(&m.s1, prec);
    let sc = s1.matvec(&c);
    let mut total = Float::new(prec);
    for (x, y) in c.iter().zip(&sc) {
        total += x * y;
    }
    total *= Float::with_val(prec, rug::float::Constant::Pi);
    Ok(total)
}

/// Rescales `w` to unit norm using the exact overlap.
pub fn normalize(w: &WaveFunction, m: &ExactMatrixSet) -> Result<WaveFunction> {
    let n2 = norm_squared(w, m)?;
    if n2.is_zero() || !n2.is_finite() {
        return invalid("cannot normalize a zero wavefunction");
    }
    let scale = n2.recip_sqrt();
    let mut out = w.clone();
    for a in &mut out.coefficients {
        *a *= &scale;
    }
    out.normalized = true;
    Ok(out)
}

/// Default quadrature sizes `(radial, angular)` exact for `|psi|^4`.
pub fn coupling_nodes(w: &WaveFunction) -> (usize, usize) {
    let k = w.basis.iter().map(|b| b.p.max(b.angular_degree())).max().unwrap_or(0) as usize;
    (2 * k + 3, 4 * k + 2)
}

/// `g = int |psi|^4 dx dy` for a normalized state.
pub fn coupling_constant(w: &WaveFunction) -> Result<f64> {
    let (nr, nt) = coupling_nodes(w);
    coupling_constant_with(w, nr, nt).map(|g| g.to_f64())
}

/// `g` with explicit node counts: Gauss-Laguerre in `x = 4 alpha r` times the
/// trapezoid rule in `theta`.
pub fn coupling_constant_with(w: &WaveFunction, radial_nodes: usize, angular_nodes: usize) -> Result<Float> {
    if !w.normalized {
        return invalid("coupling constant needs a normalized wavefunction");
    }
    if angular_nodes == 0 {
        return invalid("angular rule needs at least one node");
    }
    let prec = w.prec();
    let rule = gauss_laguerre(radial_nodes, prec)?;
    let four_alpha = Float::with_val(prec, 4.0 * w.alpha);
    let radii: Vec<Float> = rule.nodes.iter().map(|x| Float::with_val(prec, x / &four_alpha)).collect();
    // Fold the measure r dr = x dx / (16 alpha^2) into the weights.
    let weights: Vec<Float> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, wt)| {
            let mut v = Float::with_val(prec, x * wt);
            v /= Float::with_val(prec, four_alpha.square_ref());
            v
        })
        .collect();

    let (pmax, jmax) = w.max_power();
    let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
    let mut total = Float::new(prec);
    let mut q = Float::new(prec);
    let mut angular = vec![Float::new(prec); pmax as usize + 1];
    for k in 0..angular_nodes {
        let theta = Float::with_val(prec, &two_pi * k as u32) / angular_nodes as u32;
        let (sin, cos) = theta.sin_cos(Float::new(prec));
        let cj = powers(&cos, jmax);
        for a in angular.iter_mut() {
            a.assign(0);
        }
        for (a, b) in w.coefficients.iter().zip(&w.basis) {
            angular[b.p as usize] += a * &cj[b.j as usize];
        }
        if w.parity() == Parity::Odd {
            for a in angular.iter_mut() {
                *a *= &sin;
            }
        }
        for (r, wt) in radii.iter().zip(&weights) {
            // Horner in r.
            q.assign(&angular[pmax as usize]);
            for p in (0..pmax as usize).rev() {
                q *= r;
                q += &angular[p];
            }
            q.square_mut();
            q.square_mut();
            total += &q * wt;
        }
    }
    total *= &two_pi;
    total /= angular_nodes as u32;
    Ok(total)
}

/// Identifies the state a [`DensityGrid`] was sampled from.
#[derive(Clone, Debug, PartialEq)]
pub struct StateLabel {
    pub parity: Parity,
    pub n: usize,
    pub k: u32,
    pub alpha: f64,
}

/// `|psi|^2` on a uniform Cartesian grid, stored row-major with `y` outer.
#[derive(Clone, Debug)]
pub struct DensityGrid {
    /// `(x_min, x_max, y_min, y_max)`.
    pub extent: (f64, f64, f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub label: StateLabel,
}

impl DensityGrid {
    pub fn x(&self, ix: usize) -> f64 {
        let (x0, x1, _, _) = self.extent;
        x0 + (x1 - x0) * ix as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        let (_, _, y0, y1) = self.extent;
        y0 + (y1 - y0) * iy as f64 / (self.ny - 1) as f64
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn cell_area(&self) -> f64 {
        let (x0, x1, y0, y1) = self.extent;
        (x1 - x0) / (self.nx - 1) as f64 * (y1 - y0) / (self.ny - 1) as f64
    }

    /// Riemann estimate of the probability inside the extent.
    pub fn captured_probability(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }
}

/// Samples `|psi|^2` on an `nx x ny` grid spanning `extent`.
pub fn density_grid(
    w: &WaveFunction,
    extent: (f64, f64, f64, f64),
    nx: usize,
    ny: usize,
    label: StateLabel,
) -> Result<DensityGrid> {
    let (x0, x1, y0, y1) = extent;
    if nx < 2 || ny < 2 {
        return invalid(format!("grid needs at least 2x2 points, got {nx}x{ny}"));
    }
    if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
        return invalid(format!("degenerate extent ({x0}, {x1}, {y0}, {y1})"));
    }
    let mut grid = DensityGrid { extent, nx, ny, values: Vec::with_capacity(nx * ny), label };
    for iy in 0..ny {
        let y = grid.y(iy);
        for ix in 0..nx {
            let x = grid.x(ix);
            let psi = w.eval(x.hypot(y), y.atan2(x));
            grid.values.push(Float::with_val(psi.prec(), psi.square_ref()).to_f64());
        }
    }
    Ok(grid)
}

/// `hbar`, mass and dipole strength in one consistent unit system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalUnits {
    hbar: f64,
    mass: f64,
    dipole_strength: f64,
}

impl PhysicalUnits {
    pub fn new(hbar: f64, mass: f64, dipole_strength: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("dipole strength", dipole_strength)] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(PhysicalUnits { hbar, mass, dipole_strength })
    }

    /// `2 m p^2 / hbar^2`.
    pub fn energy_unit(&self) -> f64 {
        2.0 * self.mass * self.dipole_strength * self.dipole_strength / (self.hbar * self.hbar)
    }

    /// `hbar^2 / (2 m p)`.
    pub fn length_unit(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass * self.dipole_strength)
    }
}

pub fn to_physical_energy(epsilon: f64, u: &PhysicalUnits) -> f64 {
    epsilon * u.energy_unit()
}

pub fn to_dimensionless_energy(energy: f64, u: &PhysicalUnits) -> f64 {
    energy / u.energy_unit()
}

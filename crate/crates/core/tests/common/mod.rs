//! Brute-force quadrature shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use dipole_core::BasisFunction;

/// Composite Boole rule in `r` on `[0, r_max]` (`nr` a multiple of 4) times
/// the periodic trapezoid rule in `theta`, with the polar measure `r dr dt`.
pub fn polar_integral(f: impl Fn(f64, f64) -> f64, r_max: f64, nr: usize, nt: usize) -> f64 {
    assert_eq!(nr % 4, 0);
    let h = r_max / nr as f64;
    let dt = 2.0 * PI / nt as f64;
    let mut total = 0.0;
    for k in 0..nt {
        let t = k as f64 * dt;
        let mut s = 0.0;
        for i in 0..=nr {
            let r = i as f64 * h;
            let w = match i % 4 {
                _ if i == 0 || i == nr => 7.0,
                0 => 14.0,
                2 => 12.0,
                _ => 32.0,
            };
            s += w * f(r, t) * r;
        }
        total += s * 2.0 * h / 45.0;
    }
    total * dt
}

/// `|grad phi_a . grad phi_b|` in polar form with central differences.
pub fn gradient_product(a: &BasisFunction, b: &BasisFunction, alpha: f64, r: f64, t: f64) -> f64 {
    let h = 1e-5;
    let dr = |f: &BasisFunction| (f.eval(alpha, r + h, t) - f.eval(alpha, (r - h).abs(), t)) / (2.0 * h);
    let dt = |f: &BasisFunction| (f.eval(alpha, r, t + h) - f.eval(alpha, r, t - h)) / (2.0 * h);
    let radial = dr(a) * dr(b);
    let angular = if r == 0.0 { 0.0 } else { dt(a) * dt(b) / (r * r) };
    radial + angular
}

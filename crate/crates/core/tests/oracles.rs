//! Independent numerical checks of the closed-form matrix elements and
//! observables: everything here is integrated by brute force in double
//! precision from pointwise basis-function values.

use std::f64::consts::PI;

use dipole_core::assembly::{kinetic_entry, overlap_entry, potential_entry};
use dipole_core::observables::{coupling_constant, normalize, WaveFunction};
use dipole_core::optimize::{optimize_alpha, OptOptions};
use dipole_core::{assemble, enumerate_basis, spectrum, Float, Parity, Precision, Rational};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{gradient_product, polar_integral};

fn q(x: &Rational) -> f64 {
    x.to_f64()
}

#[test]
fn overlap_and_potential_match_quadrature() {
    for parity in [Parity::Even, Parity::Odd] {
        let basis = enumerate_basis(parity, 4).unwrap();
        for a in &basis {
            for b in &basis {
                let scale = (q(&overlap_entry(a, a).unwrap()) * q(&overlap_entry(b, b).unwrap())).sqrt();
                let s = polar_integral(|r, t| a.eval(1.0, r, t) * b.eval(1.0, r, t), 60.0, 6000, 48);
                assert!((s / PI - q(&overlap_entry(a, b).unwrap())).abs() <= 1e-10 * scale, "S {a} {b}");
                // cos(t)/r times the measure r: integrate phi_a phi_b cos(t) / r
                let v = polar_integral(
                    |r, t| if r == 0.0 { 0.0 } else { a.eval(1.0, r, t) * b.eval(1.0, r, t) * t.cos() / r },
                    60.0,
                    6000,
                    48,
                );
                let exact = q(&potential_entry(a, b).unwrap());
                assert!((v / PI - exact).abs() <= 1e-10 * scale, "V {a} {b}: {} vs {exact}", v / PI);
            }
        }
    }
}

#[test]
fn kinetic_matches_finite_difference_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for parity in [Parity::Even, Parity::Odd] {
        let basis = enumerate_basis(parity, 6).unwrap();
        for _ in 0..10 {
            let a = basis.choose(&mut rng).unwrap();
            let b = basis.choose(&mut rng).unwrap();
            // Keep the difference stencil off the origin, where the measure vanishes anyway.
            let t_num = polar_integral(|r, t| gradient_product(a, b, 1.0, r.max(1e-4), t), 70.0, 8000, 64);
            let exact = q(&kinetic_entry(a, b).unwrap());
            let scale = (q(&kinetic_entry(a, a).unwrap()) * q(&kinetic_entry(b, b).unwrap())).sqrt();
            assert!((t_num / PI - exact).abs() <= 2e-7 * scale, "T {a} {b}: {} vs {exact}", t_num / PI);
        }
    }
}

#[test]
fn alpha_scaling_law() {
    for parity in [Parity::Even, Parity::Odd] {
        let basis = enumerate_basis(parity, 4).unwrap();
        for &alpha in &[0.5, 1.0, 2.0] {
            let r_max = 70.0 / alpha;
            for (i, a) in basis.iter().enumerate() {
                for b in &basis[..=i] {
                    let pw = (a.p + b.p) as i32;
                    let s = polar_integral(|r, t| a.eval(alpha, r, t) * b.eval(alpha, r, t), r_max, 6000, 40);
                    let s_exact = PI * alpha.powi(-(pw + 2)) * q(&overlap_entry(a, b).unwrap());
                    let s_scale = PI
                        * alpha.powi(-(pw + 2))
                        * (q(&overlap_entry(a, a).unwrap()) * q(&overlap_entry(b, b).unwrap())).sqrt();
                    assert!((s - s_exact).abs() <= 1e-10 * s_scale, "S({alpha}) {a} {b}");
                    let v = polar_integral(
                        |r, t| if r == 0.0 { 0.0 } else { a.eval(alpha, r, t) * b.eval(alpha, r, t) * t.cos() / r },
                        r_max,
                        6000,
                        40,
                    );
                    let v_exact = PI * alpha.powi(-(pw + 1)) * q(&potential_entry(a, b).unwrap());
                    assert!((v - v_exact).abs() <= 1e-10 * s_scale * alpha, "V({alpha}) {a} {b}");
                    let tk = polar_integral(|r, t| gradient_product(a, b, alpha, r.max(1e-4), t), r_max, 8000, 40);
                    let t_exact = PI * alpha.powi(-pw) * q(&kinetic_entry(a, b).unwrap());
                    let scale = PI
                        * alpha.powi(-pw)
                        * (q(&kinetic_entry(a, a).unwrap()) * q(&kinetic_entry(b, b).unwrap())).sqrt();
                    assert!((tk - t_exact).abs() <= 2e-7 * scale, "T({alpha}) {a} {b}: {tk} vs {t_exact}");
                }
            }
        }
    }
}

/// Adaptive Simpson on `[a, b]`, started on `panels` equal pieces so that a
/// nearly vanishing tail cannot fool the first error estimate.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, panels: usize) -> f64 {
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| adaptive_panel(f, a + i as f64 * w, a + (i + 1) as f64 * w, tol / panels as f64))
        .sum()
}

fn adaptive_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn optimized_ground(m: &dipole_core::ExactMatrixSet) -> WaveFunction {
    let r = optimize_alpha(m, 1, (0.05, 5.0), &OptOptions::default()).unwrap();
    let w = WaveFunction::from_scaled(m.basis.clone(), r.alpha_star, &r.coefficients).unwrap();
    normalize(&w, m).unwrap()
}

fn psi_f64(w: &WaveFunction, r: f64, t: f64) -> f64 {
    w.basis()
        .iter()
        .zip(w.coefficients())
        .map(|(b, a)| a.to_f64() * b.eval(w.alpha(), r, t))
        .sum()
}

#[test]
fn coupling_matches_adaptive_quadrature() {
    let full = assemble(Parity::Even, 6).unwrap();
    for m in [full.leading(3).unwrap(), assemble(Parity::Even, 4).unwrap(), full] {
        let w = optimized_ground(&m);
        let r_max = 80.0 / w.alpha();
        let inner = |t: f64| adaptive_simpson(&|r: f64| psi_f64(&w, r, t).powi(4) * r, 0.0, r_max, 1e-12, 64);
        let g_adaptive = adaptive_simpson(&inner, 0.0, 2.0 * PI, 1e-10, 8);
        let g = coupling_constant(&w).unwrap();
        assert!((g - g_adaptive).abs() < 1e-6, "N={}: {g} vs {g_adaptive}", m.len());

        let norm = polar_integral(|r, t| psi_f64(&w, r, t).powi(2), r_max, 8000, 64);
        assert!((norm - 1.0).abs() < 1e-8, "norm {norm}");
    }
}

#[test]
fn two_by_two_matches_characteristic_polynomial() {
    // Even K=1: exact roots of det(H - e S) = 0 with H = a^2 T1 (V1 vanishes).
    let m = assemble(Parity::Even, 1).unwrap();
    let prec = 512;
    for alpha in [0.25, 1.0, 1.75, 3.0] {
        let a = Rational::from_f64(alpha).unwrap();
        let a2 = Rational::from(a.square_ref());
        let h = |i, j| Rational::from(m.t1.sym(i, j) * &a2) + Rational::from(m.v1.sym(i, j) * &a);
        let s = |i, j| m.s1.sym(i, j).clone();
        let qa = s(0, 0) * s(1, 1) - s(0, 1) * s(0, 1);
        let qb = -(h(0, 0) * s(1, 1) + h(1, 1) * s(0, 0) - Rational::from(2) * h(0, 1) * s(0, 1));
        let qc = h(0, 0) * h(1, 1) - h(0, 1) * h(0, 1);
        let disc = Float::with_val(prec, Rational::from(qb.square_ref()) - Rational::from(4) * &qa * &qc).sqrt();
        let two_a = Float::with_val(prec, Rational::from(2) * &qa);
        let lo = (Float::with_val(prec, -qb.clone()) - &disc) / &two_a;
        let hi = (Float::with_val(prec, -qb.clone()) + &disc) / &two_a;
        let sp = spectrum(&m, alpha, Precision::default()).unwrap();
        assert_eq!(sp.len(), 2);
        for (got, want) in sp.eigenvalues.iter().zip([lo, hi]) {
            let err = Float::with_val(prec, got - &want).abs().to_f64();
            assert!(err <= 1e-70 * want.to_f64().abs(), "alpha={alpha}: {got} vs {want}");
        }
    }
}

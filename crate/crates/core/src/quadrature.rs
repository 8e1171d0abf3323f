//! Gauss-Laguerre nodes and weights in arbitrary precision.

use rug::ops::NegAssign;
use rug::{Assign, Float};

use crate::error::{invalid, Error, Result};

/// Rule for `int_0^inf f(x) e^-x dx`, exact for polynomials of degree `< 2n`.
#[derive(Clone, Debug)]
pub struct GaussLaguerre {
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

/// `(L_n(x), L_{n-1}(x))` by the three-term recurrence.
fn laguerre_pair_f64(n: usize, x: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (1.0, 0.0);
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j as f64 - 1.0 - x) * p2 - (j as f64 - 1.0) * p3) / j as f64;
    }
    (p1, p2)
}

fn laguerre_pair(n: usize, x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut p1 = Float::with_val(prec, 1);
    let mut p2 = Float::new(prec);
    let mut p3 = Float::new(prec);
    let mut t = Float::new(prec);
    for j in 1..=n {
        std::mem::swap(&mut p3, &mut p2);
        std::mem::swap(&mut p2, &mut p1);
        // p1 = ((2j - 1 - x) p2 - (j - 1) p3) / j
        t.assign((2 * j - 1) as u32 - x);
        t *= &p2;
        p1.assign(&p3 * (j as u32 - 1));
        p1.neg_assign();
        p1 += &t;
        p1 /= j as u32;
    }
    (p1, p2)
}

/// `n`-point rule computed by Newton iteration on the Laguerre recurrence,
/// first in double precision and then polished at `prec` bits.
pub fn gauss_laguerre(n: usize, prec: u32) -> Result<GaussLaguerre> {
    if n == 0 {
        return invalid("Gauss-Laguerre rule needs at least one node");
    }
    let mut guesses: Vec<f64> = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => guesses[0] + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                let prev = guesses[i - 1];
                prev + (1.0 + 2.55 * ai) / (1.9 * ai) * (prev - guesses[i - 2])
            }
        };
        for _ in 0..100 {
            let (p1, p2) = laguerre_pair_f64(n, z);
            let dp = nf * (p1 - p2) / z;
            let step = p1 / dp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        guesses.push(z);
    }

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut step = Float::new(prec);
    for &z0 in &guesses {
        let mut z = Float::with_val(prec, z0);
        let mut converged = false;
        let mut dp = Float::new(prec);
        for _ in 0..200 {
            let (p1, p2) = laguerre_pair(n, &z);
            dp.assign(&p1 - &p2);
            dp *= n as u32;
            dp /= &z;
            step.assign(&p1 / &dp);
            z -= &step;
            let scale = Float::with_val(prec, z.abs_ref()) >> (prec as i32 - 16);
            if step.clone().abs() <= scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                method: "Gauss-Laguerre Newton",
                iterations: 200,
                residual: step.to_f64(),
            });
        }
        let (p1, p2) = laguerre_pair(n, &z);
        dp.assign(&p1 - &p2);
        dp *= n as u32;
        dp /= &z;
        // w = 1 / (x L_n'(x)^2)
        let mut w = Float::with_val(prec, dp.square_ref());
        w *= &z;
        w.recip_mut();
        nodes.push(z);
        weights.push(w);
    }
    for pair in nodes.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Internal(format!("Gauss-Laguerre nodes not distinct for n={n}")));
        }
    }
    Ok(GaussLaguerre { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;
    use rug::Integer;

    #[test]
    fn integrates_monomials_exactly() {
        let prec = 256;
        for n in [1usize, 2, 5, 17, 43, 89, 120] {
            let rule = gauss_laguerre(n, prec).unwrap();
            for k in 0..(2 * n as u32) {
                let mut sum = Float::new(prec);
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    sum += Float::with_val(prec, x.pow(k)) * w;
                }
                let exact = Float::with_val(prec, Integer::from(Integer::factorial(k)));
                let rel = Float::with_val(prec, (sum - &exact) / &exact).abs();
                assert!(rel < 1e-60, "n={n} k={k} rel={rel}");
            }
        }
    }

    #[test]
    fn two_point_rule_is_known() {
        // nodes 2 -/+ sqrt 2, weights (2 +/- sqrt 2)/4
        let rule = gauss_laguerre(2, 128).unwrap();
        let s = 2f64.sqrt();
        assert!((rule.nodes[0].to_f64() - (2.0 - s)).abs() < 1e-15);
        assert!((rule.nodes[1].to_f64() - (2.0 + s)).abs() < 1e-15);
        assert!((rule.weights[0].to_f64() - (2.0 + s) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(gauss_laguerre(0, 128).is_err());
    }
}

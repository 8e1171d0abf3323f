//! Closed-form angular and radial moments as exact rationals.
//!
//! Angular moments are returned with the factor `pi` divided out, so every
//! matrix element built from them is a plain rational number.

use rug::{Integer, Rational};

use crate::error::{invalid, Result};

/// `q` with `int_0^{2pi} cos^m(t) sin^s(t) dt = q * pi`, for `s` in `{0, 2}`.
pub fn angular_integral(m: u32, s: u32) -> Result<Rational> {
    match s {
        0 => Ok(cos_moment(m)),
        2 => Ok(cos_moment(m) - cos_moment(m + 2)),
        _ => invalid(format!("angular power of sin must be 0 or 2, got {s}")),
    }
}

fn cos_moment(m: u32) -> Rational {
    if m % 2 == 1 {
        return Rational::new();
    }
    let central = Integer::from(m).binomial(m / 2) * 2u32;
    Rational::from((central, Integer::from(1) << m))
}

/// `int_0^inf r^n e^{-2r} dr = n! / 2^{n+1}`.
pub fn radial_integral(n: u32) -> Rational {
    Rational::from((Integer::from(Integer::factorial(n)), Integer::from(1) << (n + 1)))
}

/// Precomputed moments for repeated lookups during assembly.
#[derive(Clone, Debug)]
pub(crate) struct MomentTable {
    radial: Vec<Rational>,
    cos: Vec<Rational>,
}

impl MomentTable {
    pub(crate) fn new(max_radial: u32, max_cos: u32) -> Self {
        let mut radial = Vec::with_capacity(max_radial as usize + 1);
        let mut prev = Rational::from((1, 2));
        radial.push(prev.clone());
        for n in 1..=max_radial {
            prev = prev * n / 2u32;
            radial.push(prev.clone());
        }
        let cos = (0..=max_cos + 2).map(cos_moment).collect();
        MomentTable { radial, cos }
    }

    pub(crate) fn radial(&self, n: u32) -> &Rational {
        &self.radial[n as usize]
    }

    pub(crate) fn cos(&self, m: u32) -> &Rational {
        &self.cos[m as usize]
    }

    /// `cos^m sin^2` moment.
    pub(crate) fn cos_sin2(&self, m: u32) -> Rational {
        Rational::from(self.cos(m) - self.cos(m + 2))
    }
}

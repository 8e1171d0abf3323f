//! Even and odd Slater-type basis families.
//!
//! Even functions are `e^{-ar}` and `r^p cos^j(t) e^{-ar}` with `p >= 1`;
//! odd functions are `r^p sin(t) cos^j(t) e^{-ar}` with `p >= 1`. A basis at
//! level `K` holds every monomial with `p + j <= K`, sorted by `p + j` and
//! then by `p`, so the level-`K` basis is a prefix of the level-`K+1` basis.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Symmetry under reflection about the x axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    /// `+1` for even, `-1` for odd: `psi(r, -t) = sign * psi(r, t)`.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" | "e" => Ok(Parity::Even),
            "odd" | "o" => Ok(Parity::Odd),
            other => invalid(format!("unknown parity '{other}' (expected even or odd)")),
        }
    }
}

/// One basis term `r^p [sin t] cos^j t e^{-a r}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisFunction {
    pub parity: Parity,
    /// Power of `r`.
    pub p: u32,
    /// Power of `cos t`.
    pub j: u32,
}

impl BasisFunction {
    pub fn new(parity: Parity, p: u32, j: u32) -> Result<Self> {
        let ok = match parity {
            Parity::Even => p >= 1 || j == 0,
            Parity::Odd => p >= 1,
        };
        if !ok {
            return invalid(format!("no {parity} basis function with p={p}, j={j}"));
        }
        Ok(BasisFunction { parity, p, j })
    }

    /// True for the odd family, which carries an extra `sin t`.
    pub fn sin_factor(&self) -> bool {
        self.parity == Parity::Odd
    }

    /// `p + j`; the function belongs to every basis with `K >= level`.
    pub fn level(&self) -> u32 {
        self.p + self.j
    }

    /// The bare exponential `e^{-ar}`.
    pub fn is_bare(&self) -> bool {
        self.p == 0
    }

    /// Highest angular frequency present in the function.
    pub fn angular_degree(&self) -> u32 {
        self.j + self.sin_factor() as u32
    }

    /// Angular factor `[sin t] cos^j t`.
    pub fn angular(&self, theta: f64) -> f64 {
        let c = theta.cos().powi(self.j as i32);
        if self.sin_factor() {
            c * theta.sin()
        } else {
            c
        }
    }

    /// Value at `(r, t)` for decay constant `alpha`.
    pub fn eval(&self, alpha: f64, r: f64, theta: f64) -> f64 {
        r.powi(self.p as i32) * self.angular(theta) * (-alpha * r).exp()
    }
}

impl fmt::Display for BasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.p {
            0 => {}
            1 => parts.push("r".to_string()),
            p => parts.push(format!("r^{p}")),
        }
        if self.sin_factor() {
            parts.push("sin".to_string());
        }
        match self.j {
            0 => {}
            1 => parts.push("cos".to_string()),
            j => parts.push(format!("cos^{j}")),
        }
        parts.push("exp".to_string());
        f.write_str(&parts.join(" "))
    }
}

fn check_level(k: u32) -> Result<()> {
    if k == 0 {
        return invalid("basis level K must be at least 1");
    }
    Ok(())
}

/// Number of functions in the level-`k` basis.
pub fn basis_size(parity: Parity, k: u32) -> Result<usize> {
    check_level(k)?;
    let k = k as usize;
    Ok(match parity {
        Parity::Even => (k * k + k + 2) / 2,
        Parity::Odd => k * (k + 1) / 2,
    })
}

/// The level-`k` basis in canonical order.
pub fn enumerate_basis(parity: Parity, k: u32) -> Result<Vec<BasisFunction>> {
    let mut out = Vec::with_capacity(basis_size(parity, k)?);
    if parity == Parity::Even {
        out.push(BasisFunction { parity, p: 0, j: 0 });
    }
    for level in 1..=k {
        for p in 1..=level {
            out.push(BasisFunction {
                parity,
                p,
                j: level - p,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bf(parity: Parity, p: u32, j: u32) -> BasisFunction {
        BasisFunction::new(parity, p, j).unwrap()
    }

    #[test]
    fn even_level_two_starts_with_three_term_set() {
        let b = enumerate_basis(Parity::Even, 2).unwrap();
        let e = Parity::Even;
        assert_eq!(b, vec![bf(e, 0, 0), bf(e, 1, 0), bf(e, 1, 1), bf(e, 2, 0)]);
    }

    #[test]
    fn sizes() {
        assert_eq!(enumerate_basis(Parity::Even, 20).unwrap().len(), 211);
        assert_eq!(enumerate_basis(Parity::Even, 30).unwrap().len(), 466);
        assert_eq!(basis_size(Parity::Even, 20).unwrap(), 211);
        assert_eq!(basis_size(Parity::Even, 40).unwrap(), 821);
        assert_eq!(basis_size(Parity::Even, 1).unwrap(), 2);
        assert_eq!(basis_size(Parity::Odd, 20).unwrap(), 210);
        for k in 1..=25 {
            for parity in [Parity::Even, Parity::Odd] {
                let n = enumerate_basis(parity, k).unwrap().len();
                assert_eq!(n, basis_size(parity, k).unwrap());
            }
        }
    }

    #[test]
    fn odd_level_one() {
        let b = enumerate_basis(Parity::Odd, 1).unwrap();
        assert_eq!(b, vec![bf(Parity::Odd, 1, 0)]);
        assert!(b[0].sin_factor());
    }

    #[test]
    fn level_zero_rejected() {
        assert!(matches!(
            enumerate_basis(Parity::Even, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(basis_size(Parity::Odd, 0).is_err());
        assert!(BasisFunction::new(Parity::Odd, 0, 0).is_err());
        assert!(BasisFunction::new(Parity::Even, 0, 1).is_err());
    }

    #[test]
    fn nested_and_deterministic() {
        for parity in [Parity::Even, Parity::Odd] {
            for k in 1..15 {
                let small = enumerate_basis(parity, k).unwrap();
                let big = enumerate_basis(parity, k + 1).unwrap();
                assert!(big.len() > small.len());
                assert_eq!(&big[..small.len()], &small[..]);
                assert_eq!(small, enumerate_basis(parity, k).unwrap());
            }
        }
    }

    #[test]
    fn ordering_by_level_then_radial_power() {
        for parity in [Parity::Even, Parity::Odd] {
            let b = enumerate_basis(parity, 12).unwrap();
            for w in b.windows(2) {
                assert!((w[0].level(), w[0].p) < (w[1].level(), w[1].p));
            }
            assert!(b.iter().all(|f| f.level() <= 12 && f.parity == parity));
        }
    }

    #[test]
    fn reflection_symmetry() {
        for parity in [Parity::Even, Parity::Odd] {
            for f in enumerate_basis(parity, 6).unwrap() {
                for &(r, t) in &[(0.3, 0.4), (1.7, 2.2), (4.0, -1.1)] {
                    let a = f.eval(0.8, r, t);
                    let b = f.eval(0.8, r, -t);
                    assert!((b - parity.sign() * a).abs() <= 1e-14 * a.abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn parity_parsing() {
        assert_eq!("EVEN".parse::<Parity>().unwrap(), Parity::Even);
        assert_eq!("odd".parse::<Parity>().unwrap(), Parity::Odd);
        assert!("sideways".parse::<Parity>().is_err());
    }
}

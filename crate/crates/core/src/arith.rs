//! Shared integer and real arithmetic helpers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `(a * b) mod m` without overflow for `a, b < m <= 2^96`.
#[inline]
pub fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(m > 0);
    // Inputs in this crate keep a*b within u128; enforced by construction
    // (denominators <= 2^96, multipliers <= 2^27).
    (a % m).wrapping_mul(b % m) % m
}

/// Distance from `x` to the nearest integer, in `[0, 1/2]`.
pub fn nearest_int_distance(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Euler phi and Moebius mu of `n`, by trial-division factorization.
///
/// Supports `1 <= n <= 2^34`; the square root fits comfortably in the
/// trial-division loop.
pub fn euler_phi_moebius(n: u64) -> Result<(u64, i8)> {
    const MAX: u64 = 1 << 34;
    if n == 0 || n > MAX {
        return Err(Error::Resource {
            what: "euler_phi_moebius n",
            requested: n as u128,
            bound: MAX as u128,
        });
    }
    let mut m = n;
    let mut phi = 1u64;
    let mut mu = 1i8;
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            phi *= (p - 1) * p.pow(e - 1);
            mu = if e > 1 { 0 } else { -mu };
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        phi *= m - 1;
        mu = -mu;
    }
    Ok((phi, mu))
}

/// An exact nonnegative rational, kept in lowest terms.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

impl Ratio {
    pub fn new(num: u128, den: u128) -> Ratio {
        assert!(den > 0, "zero denominator");
        let g = gcd_u128(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn mul_int(self, k: u128) -> Ratio {
        Ratio::new(self.num * k, self.den)
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_int_distance_examples() {
        assert_eq!(nearest_int_distance(0.5), 0.5);
        assert_eq!(nearest_int_distance(3.25), 0.25);
        assert!((nearest_int_distance(-0.1) - 0.1).abs() < 1e-15);
        assert_eq!(nearest_int_distance(7.0), 0.0);
    }

    #[test]
    fn phi_mu_examples() {
        assert_eq!(euler_phi_moebius(10).unwrap(), (4, 1));
        assert_eq!(euler_phi_moebius(12).unwrap(), (4, 0));
        assert_eq!(euler_phi_moebius(30).unwrap(), (8, -1));
        assert_eq!(euler_phi_moebius(1).unwrap(), (1, 1));
        assert_eq!(euler_phi_moebius(2).unwrap(), (1, -1));
        assert_eq!(euler_phi_moebius(97).unwrap(), (96, -1));
    }

    #[test]
    fn phi_divisor_sum_identity() {
        // sum_{d | n} phi(d) = n
        for n in 1u64..=200 {
            let mut s = 0;
            for d in 1..=n {
                if n % d == 0 {
                    s += euler_phi_moebius(d).unwrap().0;
                }
            }
            assert_eq!(s, n, "phi divisor sum failed at n={n}");
        }
    }

    #[test]
    fn phi_mu_rejects_out_of_range() {
        assert!(euler_phi_moebius(0).is_err());
        assert!(euler_phi_moebius((1 << 34) + 1).is_err());
    }

    #[test]
    fn ratio_reduces() {
        let r = Ratio::new(30, 36);
        assert_eq!(r, Ratio::new(5, 6));
        assert_eq!(r.to_string(), "5/6");
    }
}

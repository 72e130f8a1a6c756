//! Points on the circle R/Z with an exact rational part, plus Dirichlet
//! rational approximation by continued-fraction convergents.
//!
//! Keeping the rational part of a frequency exact matters: evaluating a
//! digit product formula at level `i` needs `b^i * theta mod 1`, and for
//! `b^i` in the millions a plain floating-point reduction destroys the
//! phase. All integer-multiple reductions here go through `u128` modular
//! arithmetic; only a small real `offset` is tracked in floating point.

use crate::arith::{gcd_u128, gcd_u64, mul_mod};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// A frequency `theta = num/den + offset`, reduced into `[0, 1)`.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct Frequency {
    num: u64,
    den: u64,
    offset: f64,
}

impl Frequency {
    /// Exact rational `num/den` reduced modulo 1.
    pub fn new(num: i64, den: u64) -> Result<Frequency> {
        if den == 0 {
            return Err(Error::Precondition("frequency denominator is zero".into()));
        }
        let n = num.rem_euclid(den as i64) as u64;
        let g = gcd_u64(n, den).max(1);
        Ok(Frequency {
            num: n / g,
            den: den / g,
            offset: 0.0,
        })
    }

    /// Rational part plus a small real offset; the value is reduced mod 1.
    pub fn with_offset(num: i64, den: u64, offset: f64) -> Result<Frequency> {
        if !offset.is_finite() {
            return Err(Error::NonFinite("frequency offset"));
        }
        let mut f = Frequency::new(num, den)?;
        f.offset = offset - offset.floor();
        Ok(f)
    }

    /// Exact dyadic representation of an `f64`.
    ///
    /// Every finite `f64` in `[0, 1)` with denominator dividing `2^63` is
    /// captured exactly (uniform random doubles are `k/2^53`, so they are);
    /// anything finer is snapped to the nearest `1/2^63`, an error below
    /// `2^-64`.
    pub fn from_f64(x: f64) -> Frequency {
        assert!(x.is_finite(), "non-finite frequency");
        let x = x - x.floor();
        let x = if x >= 1.0 { 0.0 } else { x };
        const DEN: u64 = 1 << 63;
        // Power-of-two scaling is exact in IEEE arithmetic.
        let num = (x * DEN as f64).round() as u64 % DEN;
        let g = gcd_u64(num, DEN).max(1);
        Frequency {
            num: num / g,
            den: DEN / g,
            offset: 0.0,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// The value of the frequency in `[0, 1)`.
    pub fn value(&self) -> f64 {
        let v = self.num as f64 / self.den as f64 + self.offset;
        if v >= 1.0 {
            v - 1.0
        } else {
            v
        }
    }

    /// `m * theta mod 1`, with the rational part reduced exactly.
    pub fn scaled(&self, m: u64) -> Frequency {
        let num = mul_mod(self.num as u128, m as u128, self.den as u128) as u64;
        let g = gcd_u64(num, self.den).max(1);
        let offset = if self.offset == 0.0 {
            0.0
        } else {
            let t = self.offset * m as f64;
            t - t.floor()
        };
        Frequency {
            num: num / g,
            den: self.den / g,
            offset,
        }
    }

    /// `-theta` on the circle.
    pub fn neg(&self) -> Frequency {
        let num = if self.num == 0 {
            0
        } else {
            self.den - self.num
        };
        let mut f = Frequency {
            num,
            den: self.den,
            offset: 0.0,
        };
        if self.offset != 0.0 {
            f.offset = -self.offset;
        }
        f
    }

}

impl std::fmt::Display for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.offset == 0.0 {
            write!(f, "{}/{}", self.num, self.den)
        } else {
            write!(f, "{}/{}{:+e}", self.num, self.den, self.offset)
        }
    }
}

impl FromStr for Frequency {
    type Err = Error;

    /// Parses `"p/q"` or a bare integer. Decimal floats are rejected:
    /// rationals on the command line must be exact.
    fn from_str(s: &str) -> Result<Frequency> {
        let bad = |m: &str| Error::Precondition(format!("cannot parse frequency {s:?}: {m}"));
        if s.contains('.') {
            return Err(bad("use an exact rational p/q, not a decimal"));
        }
        match s.split_once('/') {
            Some((p, q)) => {
                let p: i64 = p.trim().parse().map_err(|_| bad("bad numerator"))?;
                let q: u64 = q.trim().parse().map_err(|_| bad("bad denominator"))?;
                Frequency::new(p, q)
            }
            None => {
                let p: i64 = s.trim().parse().map_err(|_| bad("not an integer"))?;
                Frequency::new(p, 1)
            }
        }
    }
}

/// Dirichlet approximation `theta = ell/d + beta` with `d <= d0` and
/// `|beta| < 1/(d*d0)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalApprox {
    pub ell: i64,
    pub d: u64,
    pub beta: f64,
    pub d0: u64,
}

impl RationalApprox {
    /// `ell/d + beta`, for reconstruction checks.
    pub fn value(&self) -> f64 {
        self.ell as f64 / self.d as f64 + self.beta
    }
}

/// Best rational approximation with denominator at most `d0`, computed by
/// continued-fraction convergents of the exact (dyadic) value of `alpha`.
///
/// Among the convergents satisfying `|beta| < 1/(d*d0)` the one with the
/// largest denominator is returned, which makes ties deterministic. If the
/// value is itself a rational with denominator `<= d0`, `beta` is exactly 0.
pub fn dirichlet_approx(alpha: &Frequency, d0: u64) -> Result<RationalApprox> {
    if d0 == 0 {
        return Err(Error::Precondition(
            "dirichlet_approx requires d0 >= 1".into(),
        ));
    }
    let (p, q): (u128, u128) = if alpha.offset == 0.0 {
        (alpha.num as u128, alpha.den as u128)
    } else {
        let f = Frequency::from_f64(alpha.value());
        (f.num as u128, f.den as u128)
    };
    debug_assert!(p < q);

    // Continued-fraction convergents h/k of p/q; keep the last one with
    // k <= d0. The zeroth convergent 0/1 always qualifies.
    let (mut n, mut d) = (p, q);
    let (mut hm2, mut hm1): (u128, u128) = (0, 1);
    let (mut km2, mut km1): (u128, u128) = (1, 0);
    let mut best: Option<(u128, u128)> = None;
    loop {
        let a = n / d;
        let h = a * hm1 + hm2;
        let k = a * km1 + km2;
        if k > d0 as u128 {
            break;
        }
        best = Some((h, k));
        let r = n % d;
        hm2 = hm1;
        hm1 = h;
        km2 = km1;
        km1 = k;
        if r == 0 {
            break;
        }
        n = d;
        d = r;
    }
    let (ell, den) = best.expect("zeroth convergent has denominator 1");

    // beta = p/q - ell/den, exact in i128 before the final rounding.
    let diff = p as i128 * den as i128 - ell as i128 * q as i128;
    let beta = if diff == 0 {
        0.0
    } else {
        diff as f64 / (q as i128 * den as i128) as f64
    };
    Ok(RationalApprox {
        ell: ell as i64,
        d: den as u64,
        beta,
        d0,
    })
}

/// A phase in `[0, 1)` with an exact rational part, used while walking the
/// levels of a digit product. The `off` component is the only inexact part;
/// every multiplication by an integer reduces the rational part exactly.
#[derive(Copy, Clone, Debug)]
pub struct Phase {
    num: u128,
    den: u128,
    off: f64,
}

impl Phase {
    pub fn from_frequency(f: &Frequency) -> Phase {
        Phase {
            num: f.num as u128,
            den: f.den as u128,
            off: f.offset,
        }
        .normalized()
    }

    pub fn zero() -> Phase {
        Phase {
            num: 0,
            den: 1,
            off: 0.0,
        }
    }

    fn normalized(mut self) -> Phase {
        debug_assert!(self.den > 0);
        self.num %= self.den;
        // Keep num/den + off inside [0, 1); off only ever moves by integers.
        // Rounding can trap the value exactly on the 0/1 seam (v rounds up
        // to 1, v - 1 rounds below 0, forever), so the loop is bounded and
        // the seam case snaps to an exact 0: the true value is then within
        // one ulp of an integer.
        let max_steps = 2 + self.off.abs() as u32;
        for _ in 0..max_steps {
            let v = self.num as f64 / self.den as f64 + self.off;
            if v < 0.0 {
                self.off += 1.0;
            } else if v >= 1.0 {
                self.off -= 1.0;
            } else {
                return self;
            }
        }
        self.off = -(self.num as f64 / self.den as f64);
        self
    }

    /// Value in `[0, 1)`.
    pub fn value(&self) -> f64 {
        let v = self.num as f64 / self.den as f64 + self.off;
        v.clamp(0.0, 1.0 - f64::EPSILON)
    }

    /// Distance to the nearest integer, accurate near both 0 and 1.
    pub fn dist_to_int(&self) -> f64 {
        let lo = self.num as f64 / self.den as f64 + self.off;
        let hi = (self.den - self.num) as f64 / self.den as f64 - self.off;
        lo.min(hi).max(0.0)
    }

    /// `sin(pi * value)`, computed from whichever end of the interval is
    /// closer so the result keeps full relative precision near zero.
    pub fn sin_pi(&self) -> f64 {
        let lo = self.num as f64 / self.den as f64 + self.off;
        let hi = (self.den - self.num) as f64 / self.den as f64 - self.off;
        (std::f64::consts::PI * lo.min(hi).max(0.0)).sin()
    }

    /// `n * value mod 1`, with the rational part reduced in integers.
    pub fn mul_int(&self, n: u64) -> Phase {
        let num = mul_mod(self.num, n as u128, self.den);
        let off = if self.off == 0.0 {
            0.0
        } else {
            let t = self.off * n as f64;
            t - t.floor()
        };
        Phase {
            num,
            den: self.den,
            off,
        }
        .normalized()
    }

    /// Shift by a small real offset.
    pub fn add_offset(&self, eps: f64) -> Phase {
        Phase {
            num: self.num,
            den: self.den,
            off: self.off + eps,
        }
        .normalized()
    }

    /// `value + p/q mod 1` with an exact common denominator.
    pub fn add_rational(&self, p: u64, q: u64) -> Phase {
        debug_assert!(q > 0);
        let g = gcd_u128(self.den, q as u128);
        let l = self.den / g * q as u128;
        let num = (self.num * (l / self.den) + (p as u128 % q as u128) * (l / q as u128)) % l;
        Phase {
            num,
            den: l,
            off: self.off,
        }
        .normalized()
    }

    /// `e(value) = exp(2 pi i value)`.
    pub fn e(&self) -> Complex64 {
        let (s, c) = (std::f64::consts::TAU * self.value()).sin_cos();
        Complex64::new(c, s)
    }

    /// `exp(i pi value)`.
    pub fn e_half(&self) -> Complex64 {
        let (s, c) = (std::f64::consts::PI * self.value()).sin_cos();
        Complex64::new(c, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_reduces_mod_one() {
        let f = Frequency::new(5, 4).unwrap();
        assert_eq!((f.num(), f.den()), (1, 4));
        let f = Frequency::new(-1, 4).unwrap();
        assert_eq!((f.num(), f.den()), (3, 4));
    }

    #[test]
    fn from_f64_is_exact_on_dyadics() {
        let f = Frequency::from_f64(0.5);
        assert_eq!((f.num(), f.den()), (1, 2));
        let f = Frequency::from_f64(0.375);
        assert_eq!((f.num(), f.den()), (3, 8));
        let x = 12345678.0 / 9007199254740992.0; // k / 2^53
        assert_eq!(Frequency::from_f64(x).value(), x);
    }

    #[test]
    fn parse_rejects_decimals() {
        assert!("0.5".parse::<Frequency>().is_err());
        let f: Frequency = "1/2".parse().unwrap();
        assert_eq!((f.num(), f.den()), (1, 2));
        let f: Frequency = "7".parse().unwrap();
        assert_eq!(f.value(), 0.0);
    }

    #[test]
    fn dirichlet_half() {
        let a = dirichlet_approx(&Frequency::new(1, 2).unwrap(), 10).unwrap();
        assert_eq!((a.ell, a.d, a.beta), (1, 2, 0.0));
    }

    #[test]
    fn dirichlet_exact_rational_input() {
        // a/b^k representable with d <= d0 comes back reduced with beta = 0.
        let a = dirichlet_approx(&Frequency::new(2500, 10_000).unwrap(), 100).unwrap();
        assert_eq!((a.ell, a.d, a.beta), (1, 4, 0.0));
    }

    #[test]
    fn dirichlet_inverse_pi() {
        let x = std::f64::consts::FRAC_1_PI;
        let a = dirichlet_approx(&Frequency::from_f64(x), 100).unwrap();
        // Convergents of 1/pi: 0, 1/3, 7/22, 106/333, ...
        assert_eq!((a.ell, a.d), (7, 22));
        assert!(a.beta.abs() < 1.0 / (22.0 * 100.0));
        assert!((a.value() - x).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_beats_exhaustive_search() {
        // The returned denominator satisfies the Dirichlet inequality, and an
        // exhaustive scan over d <= d0 finds no strictly better error.
        let x = std::f64::consts::FRAC_1_PI;
        let a = dirichlet_approx(&Frequency::from_f64(x), 100).unwrap();
        let mut best_err = f64::INFINITY;
        for d in 1..=100u64 {
            let ell = (x * d as f64).round();
            let err = (x - ell / d as f64).abs();
            if err < best_err {
                best_err = err;
            }
        }
        assert!(a.beta.abs() <= best_err * (1.0 + 1e-12));
    }

    #[test]
    fn dirichlet_zero() {
        let a = dirichlet_approx(&Frequency::new(0, 1).unwrap(), 7).unwrap();
        assert_eq!((a.ell, a.d, a.beta), (0, 1, 0.0));
    }

    #[test]
    fn phase_mul_int_reduces_exactly() {
        let p = Phase::from_frequency(&Frequency::new(1, 3).unwrap());
        let q = p.mul_int(3);
        assert_eq!(q.dist_to_int(), 0.0);
        let q = p.mul_int(10u64.pow(8));
        // 10^8 / 3 mod 1 = 1/3 exactly
        assert!((q.value() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn phase_sin_pi_accurate_near_one() {
        // value = 1 - 1/10^9: sin(pi v) = sin(pi/10^9) with full precision
        let f = Frequency::new(10u64.pow(9) as i64 - 1, 10u64.pow(9)).unwrap();
        let p = Phase::from_frequency(&f);
        let expected = std::f64::consts::PI / 1e9;
        assert!((p.sin_pi() - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn neg_is_conjugate_position() {
        let f = Frequency::new(3, 10).unwrap();
        let g = f.neg();
        assert!((f.value() + g.value() - 1.0).abs() < 1e-15);
        assert_eq!(Frequency::new(0, 5).unwrap().neg().value(), 0.0);
    }
}

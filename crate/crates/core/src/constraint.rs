//! Digit constraints: a missing digit, a digit-sum residue class, or
//! prescribed digits at fixed positions, together with the counting oracle
//! over a prime table.

use crate::arith::gcd_u64;
use crate::error::{Error, Result};
use crate::sieve::PrimeTable;
use serde::{Deserialize, Serialize};

/// A digit base `b >= 2`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Base(u32);

impl Base {
    pub fn new(b: u32) -> Result<Base> {
        if b < 2 {
            return Err(Error::Precondition(format!("base must be >= 2, got {b}")));
        }
        Ok(Base(b))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// `b^k` as a `u64`, failing on overflow.
    pub fn pow(self, k: u32) -> Result<u64> {
        (self.0 as u64).checked_pow(k).ok_or(Error::Resource {
            what: "b^k",
            requested: u128::MAX,
            bound: u64::MAX as u128,
        })
    }

    /// `b^k` checked against an explicit operating bound.
    pub fn pow_bounded(self, k: u32, bound: u64, what: &'static str) -> Result<u64> {
        let n = (self.0 as u128).pow(k);
        if n > bound as u128 {
            return Err(Error::Resource {
                what,
                requested: n,
                bound: bound as u128,
            });
        }
        Ok(n as u64)
    }
}

/// Sum of base-`b` digits of `n`.
pub fn digit_sum(mut n: u64, b: Base) -> u64 {
    let b = b.get() as u64;
    let mut s = 0;
    while n > 0 {
        s += n % b;
        n /= b;
    }
    s
}

/// Which digit condition a computation targets.
///
/// `DigitSumResidue` carries both the counted class `s_b(n) = a (mod m)` and
/// the character index `j` whose frequency `j/m` drives the exponential-sum
/// evaluations for that class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DigitConstraint {
    /// No base-b digit of n equals `a0`.
    MissingDigit { a0: u32 },
    /// `s_b(n) = a (mod m)`, with character frequency `j/m`.
    DigitSumResidue { m: u32, a: u32, j: u32 },
    /// Digit at position `pos` (0 = least significant) equals the given value.
    PrescribedDigits { digits: Vec<(u32, u32)> },
}

impl DigitConstraint {
    pub fn missing_digit(a0: u32) -> DigitConstraint {
        DigitConstraint::MissingDigit { a0 }
    }

    pub fn digit_sum_residue(m: u32, a: u32) -> DigitConstraint {
        DigitConstraint::DigitSumResidue {
            m,
            a,
            j: if m > 1 { 1 } else { 0 },
        }
    }

    /// Same residue class, evaluated with the character `j/m`.
    pub fn with_character(self, j: u32) -> DigitConstraint {
        match self {
            DigitConstraint::DigitSumResidue { m, a, .. } => {
                DigitConstraint::DigitSumResidue { m, a, j }
            }
            other => other,
        }
    }

    pub fn prescribed(digits: Vec<(u32, u32)>) -> DigitConstraint {
        DigitConstraint::PrescribedDigits { digits }
    }

    /// The always-true constraint: an empty prescribed set.
    pub fn always_true() -> DigitConstraint {
        DigitConstraint::PrescribedDigits { digits: vec![] }
    }

    /// Validity for a given base (and digit-window length `k` where relevant).
    pub fn validate(&self, b: Base, k: u32) -> Result<()> {
        match self {
            DigitConstraint::MissingDigit { a0 } => {
                if *a0 >= b.get() {
                    return Err(Error::Constraint(format!(
                        "excluded digit {a0} is not a base-{} digit",
                        b.get()
                    )));
                }
            }
            DigitConstraint::DigitSumResidue { m, a, j } => {
                if *m == 0 {
                    return Err(Error::Constraint("modulus m must be positive".into()));
                }
                if gcd_u64(*m as u64, b.get() as u64 - 1) != 1 {
                    return Err(Error::Constraint(format!(
                        "gcd(m, b-1) = gcd({m}, {}) must be 1",
                        b.get() - 1
                    )));
                }
                if a >= m {
                    return Err(Error::Constraint(format!("residue {a} not below m = {m}")));
                }
                if j >= m {
                    return Err(Error::Constraint(format!("character {j}/{m} not reduced")));
                }
            }
            DigitConstraint::PrescribedDigits { digits } => {
                for &(pos, val) in digits {
                    if pos >= k {
                        return Err(Error::Constraint(format!(
                            "prescribed position {pos} outside 0..{k}"
                        )));
                    }
                    if val >= b.get() {
                        return Err(Error::Constraint(format!(
                            "prescribed value {val} is not a base-{} digit",
                            b.get()
                        )));
                    }
                }
                let mut seen: Vec<u32> = digits.iter().map(|d| d.0).collect();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != digits.len() {
                    return Err(Error::Constraint("duplicate prescribed position".into()));
                }
            }
        }
        Ok(())
    }

    /// Whether `n` satisfies the constraint, reading digits in the k-digit
    /// window (leading zeros included). For an excluded digit `a0 = 0` this
    /// matters: an integer shorter than k digits has zeros in the window and
    /// is outside the set, which is what the length-k product formulas count.
    pub fn holds(&self, n: u64, b: Base, k: u32) -> bool {
        let base = b.get() as u64;
        match self {
            DigitConstraint::MissingDigit { a0 } => {
                let mut m = n;
                for _ in 0..k {
                    if m % base == *a0 as u64 {
                        return false;
                    }
                    m /= base;
                }
                true
            }
            DigitConstraint::DigitSumResidue { m, a, .. } => {
                digit_sum(n, b) % *m as u64 == *a as u64
            }
            DigitConstraint::PrescribedDigits { digits } => digits
                .iter()
                .all(|&(pos, val)| n / base.pow(pos) % base == val as u64),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DigitConstraint::MissingDigit { .. } => "missing-digit",
            DigitConstraint::DigitSumResidue { .. } => "digit-sum-residue",
            DigitConstraint::PrescribedDigits { .. } => "prescribed-digits",
        }
    }
}

/// Incremental base-b counter over `n = 0, 1, 2, ...` that maintains the
/// digit sum and per-constraint counters in O(1) amortized per step. This is
/// what makes the O(b^k) oracle sums cheap enough to use as ground truth.
pub struct DigitOdometer {
    b: u64,
    digits: Vec<u32>,
    digit_sum: u64,
    a0: Option<u32>,
    a0_count: u32,
    prescribed: Vec<Option<u32>>,
    violations: u32,
}

impl DigitOdometer {
    pub fn new(b: Base, k: u32, constraint: &DigitConstraint) -> DigitOdometer {
        let mut prescribed = vec![None; k as usize];
        let mut a0 = None;
        match constraint {
            DigitConstraint::MissingDigit { a0: d } => a0 = Some(*d),
            DigitConstraint::PrescribedDigits { digits } => {
                for &(pos, val) in digits {
                    prescribed[pos as usize] = Some(val);
                }
            }
            DigitConstraint::DigitSumResidue { .. } => {}
        }
        // n = 0: every digit is 0.
        let a0_count = if a0 == Some(0) { k } else { 0 };
        let violations = prescribed.iter().flatten().filter(|&&v| v != 0).count() as u32;
        DigitOdometer {
            b: b.get() as u64,
            digits: vec![0; k as usize],
            digit_sum: 0,
            a0,
            a0_count,
            prescribed,
            violations,
        }
    }

    pub fn digit_sum(&self) -> u64 {
        self.digit_sum
    }

    /// Whether the current value satisfies the constraint the odometer was
    /// built for (digit-sum constraints are checked by the caller from
    /// `digit_sum`).
    pub fn satisfies(&self) -> bool {
        self.a0_count == 0 && self.violations == 0
    }

    fn set_digit(&mut self, pos: usize, new: u32) {
        let old = self.digits[pos];
        self.digit_sum = self.digit_sum + new as u64 - old as u64;
        if let Some(a0) = self.a0 {
            if old == a0 {
                self.a0_count -= 1;
            }
            if new == a0 {
                self.a0_count += 1;
            }
        }
        if let Some(want) = self.prescribed[pos] {
            if old != want && new == want {
                self.violations -= 1;
            }
            if old == want && new != want {
                self.violations += 1;
            }
        }
        self.digits[pos] = new;
    }

    /// Advance to the next integer; wraps silently past b^k - 1.
    pub fn increment(&mut self) {
        for pos in 0..self.digits.len() {
            let d = self.digits[pos] as u64 + 1;
            if d == self.b {
                self.set_digit(pos, 0);
            } else {
                self.set_digit(pos, d as u32);
                return;
            }
        }
    }
}

/// Count primes (or sum `Lambda` over integers) below `b^k` that satisfy the
/// constraint; the brute-force ground truth for every estimator.
pub fn count_constrained_primes(
    constraint: &DigitConstraint,
    b: Base,
    k: u32,
    weighted: bool,
    table: &PrimeTable,
) -> Result<f64> {
    constraint.validate(b, k)?;
    let n = b.pow_bounded(k, table.limit(), "count_constrained_primes b^k")?;
    if weighted {
        let mut total = 0.0;
        for &(m, v) in table.mangoldt_below(n) {
            if constraint.holds(m, b, k) {
                total += v;
            }
        }
        Ok(total)
    } else {
        let end = table.prime_count(n);
        let mut count = 0u64;
        for &p in &table.primes()[..end] {
            if constraint.holds(p, b, k) {
                count += 1;
            }
        }
        Ok(count as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::sieve_primes;

    #[test]
    fn digit_sums() {
        assert_eq!(digit_sum(999, Base::new(10).unwrap()), 27);
        assert_eq!(digit_sum(5, Base::new(2).unwrap()), 2);
        let s = digit_sum(9973, Base::new(10).unwrap());
        assert_eq!(s, 28);
        // s_b(n) = n (mod b-1)
        assert_eq!(s % 9, 9973 % 9);
    }

    #[test]
    fn missing_digit_membership() {
        let b = Base::new(10).unwrap();
        let c = DigitConstraint::missing_digit(7);
        assert!(c.holds(16, b, 2));
        assert!(!c.holds(7, b, 1));
        assert!(!c.holds(174, b, 3));
        assert!(c.holds(0, b, 3));
        // the window reading: leading zeros are zeros
        let c0 = DigitConstraint::missing_digit(0);
        assert!(!c0.holds(0, b, 1));
        assert!(!c0.holds(5, b, 2));
        assert!(c0.holds(55, b, 2));
    }

    #[test]
    fn counts_below_100() {
        let b = Base::new(10).unwrap();
        let t = sieve_primes(101).unwrap();
        let no7 =
            count_constrained_primes(&DigitConstraint::missing_digit(7), b, 2, false, &t).unwrap();
        assert_eq!(no7, 16.0);
        let even =
            count_constrained_primes(&DigitConstraint::digit_sum_residue(2, 0), b, 2, false, &t)
                .unwrap();
        assert_eq!(even, 13.0);
    }

    #[test]
    fn prescribed_last_digit_one_below_ten() {
        let b = Base::new(10).unwrap();
        let t = sieve_primes(11).unwrap();
        let c = DigitConstraint::prescribed(vec![(0, 1)]);
        let n = count_constrained_primes(&c, b, 1, false, &t).unwrap();
        assert_eq!(n, 0.0);
    }

    #[test]
    fn always_true_matches_pi_and_psi() {
        let b = Base::new(10).unwrap();
        let t = sieve_primes(10_001).unwrap();
        let c = DigitConstraint::always_true();
        let unweighted = count_constrained_primes(&c, b, 4, false, &t).unwrap();
        assert_eq!(unweighted as usize, t.prime_count(10_000));
        let weighted = count_constrained_primes(&c, b, 4, true, &t).unwrap();
        assert!((weighted - t.psi(9_999)).abs() < 1e-9);
    }

    #[test]
    fn validation_errors() {
        let b = Base::new(10).unwrap();
        assert!(DigitConstraint::missing_digit(10).validate(b, 3).is_err());
        // gcd(3, 9) != 1
        assert!(DigitConstraint::digit_sum_residue(3, 0)
            .validate(b, 3)
            .is_err());
        assert!(DigitConstraint::digit_sum_residue(2, 2)
            .validate(b, 3)
            .is_err());
        assert!(DigitConstraint::prescribed(vec![(5, 1)])
            .validate(b, 3)
            .is_err());
        assert!(DigitConstraint::prescribed(vec![(0, 1), (0, 2)])
            .validate(b, 3)
            .is_err());
        assert!(DigitConstraint::digit_sum_residue(2, 0)
            .validate(b, 3)
            .is_ok());
    }

    #[test]
    fn odometer_agrees_with_direct_checks() {
        let b = Base::new(10).unwrap();
        for c in [
            DigitConstraint::missing_digit(7),
            DigitConstraint::missing_digit(0),
            DigitConstraint::prescribed(vec![(1, 3)]),
            DigitConstraint::always_true(),
        ] {
            let mut odo = DigitOdometer::new(b, 3, &c);
            for n in 0..1000u64 {
                assert_eq!(odo.satisfies(), c.holds(n, b, 3), "constraint {c:?} at {n}");
                assert_eq!(odo.digit_sum(), digit_sum(n, b), "digit sum at {n}");
                odo.increment();
            }
        }
    }

    #[test]
    fn resource_error_beyond_table() {
        let b = Base::new(10).unwrap();
        let t = sieve_primes(100).unwrap();
        let c = DigitConstraint::missing_digit(7);
        assert!(count_constrained_primes(&c, b, 3, false, &t).is_err());
    }
}

//! Fourier transforms of digit-constraint weights.
//!
//! The transform of a digit constraint over `[0, b^k)` factors into k
//! single-digit sums, one per digit level, so a point evaluation costs O(k)
//! kernel evaluations instead of O(b^k) terms. This module provides:
//!
//! * [`fourier_eval`] — the length-k product formula;
//! * [`naive_fourier_oracle`] — the O(b^k) defining sum, kept as ground truth;
//! * [`fourier_derivative_eval`] — the product-rule derivative;
//! * [`full_spectrum`] — all `b^k` values at `a/b^k` by a radix-b
//!   decimation fast transform over the same digit factorization.
//!
//! Transforms use the positive-exponent convention
//! `f_hat(theta) = sum_{n<x} f(n) e(n theta)` with `e(t) = exp(2 pi i t)`.

use crate::constraint::{Base, DigitConstraint, DigitOdometer};
use crate::error::{Error, Result};
use crate::freq::{Frequency, Phase};
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;

/// A complex transform value.
pub type Amplitude = Complex64;

/// Below this distance from an integer the geometric-ratio form of a digit
/// kernel is 0/0; the kernel falls back to the direct b-term sum.
pub const SINGULARITY_THRESHOLD: f64 = 1e-9;

/// Maximum `b^k` for the naive oracle.
pub const MAX_ORACLE_POINTS: u64 = 10_000_000;

/// Maximum `b^k` for a full spectrum.
pub const MAX_SPECTRUM_POINTS: u64 = 100_000_000;

/// `sum_{n<b} e(n t)`: the full single-digit geometric sum.
///
/// Away from integers this is `sin(pi b t)/sin(pi t) * exp(i pi (b-1) t)`,
/// evaluated through exactly reduced fractional parts; near integers the
/// singularity is removable and the direct sum is used.
fn digit_kernel(t: &Phase, b: u32) -> Complex64 {
    if t.dist_to_int() < SINGULARITY_THRESHOLD {
        let mut acc = Complex64::ZERO;
        for n in 0..b as u64 {
            acc += t.mul_int(n).e();
        }
        return acc;
    }
    let u = t.mul_int(b as u64);
    let modulus = u.sin_pi() / t.sin_pi();
    let (s, c) = (std::f64::consts::PI * (u.value() - t.value())).sin_cos();
    modulus * Complex64::new(c, s)
}

/// `sum_{n<b} n e(n t)`, by direct summation (b is small).
fn weighted_digit_kernel(t: &Phase, b: u32, skip: Option<u32>) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for n in 1..b as u64 {
        if skip == Some(n as u32) {
            continue;
        }
        acc += n as f64 * t.mul_int(n).e();
    }
    acc
}

/// The level-i factor of the product formula, given the phase `t = b^i theta`.
fn constraint_factor(constraint: &DigitConstraint, t: &Phase, b: Base, level: u32) -> Complex64 {
    match constraint {
        DigitConstraint::MissingDigit { a0 } => {
            digit_kernel(t, b.get()) - t.mul_int(*a0 as u64).e()
        }
        DigitConstraint::DigitSumResidue { m, j, .. } => {
            digit_kernel(&t.add_rational(*j as u64, *m as u64), b.get())
        }
        DigitConstraint::PrescribedDigits { digits } => {
            match digits.iter().find(|d| d.0 == level) {
                Some(&(_, val)) => t.mul_int(val as u64).e(),
                None => digit_kernel(t, b.get()),
            }
        }
    }
}

/// Derivative of the level-i factor divided by `2 pi i b^i`, i.e. the
/// n-weighted digit sum at that level.
fn constraint_factor_weighted(
    constraint: &DigitConstraint,
    t: &Phase,
    b: Base,
    level: u32,
) -> Complex64 {
    match constraint {
        DigitConstraint::MissingDigit { a0 } => weighted_digit_kernel(t, b.get(), Some(*a0)),
        DigitConstraint::DigitSumResidue { m, j, .. } => {
            weighted_digit_kernel(&t.add_rational(*j as u64, *m as u64), b.get(), None)
        }
        DigitConstraint::PrescribedDigits { digits } => {
            match digits.iter().find(|d| d.0 == level) {
                Some(&(_, val)) => val as f64 * t.mul_int(val as u64).e(),
                None => weighted_digit_kernel(t, b.get(), None),
            }
        }
    }
}

fn check_eval_args(constraint: &DigitConstraint, b: Base, k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::Precondition(
            "transform length k must be >= 1".into(),
        ));
    }
    constraint.validate(b, k)
}

/// Evaluate the transform of the constraint weight at `theta` by the
/// length-k product formula; O(k) kernel evaluations.
pub fn fourier_eval(
    constraint: &DigitConstraint,
    theta: &Frequency,
    b: Base,
    k: u32,
) -> Result<Amplitude> {
    check_eval_args(constraint, b, k)?;
    fourier_eval_at(constraint, Phase::from_frequency(theta), b, k)
}

/// Product-formula evaluation at a prepared phase; arguments are assumed
/// validated. Lets callers build phases like `l/d + theta + eps` whose
/// common denominator would overflow a plain `Frequency`.
pub(crate) fn fourier_eval_at(
    constraint: &DigitConstraint,
    start: Phase,
    b: Base,
    k: u32,
) -> Result<Amplitude> {
    let mut t = start;
    let mut acc = Complex64::ONE;
    for level in 0..k {
        acc *= constraint_factor(constraint, &t, b, level);
        t = t.mul_int(b.get() as u64);
    }
    if !acc.is_finite() {
        return Err(Error::NonFinite("fourier_eval factor product"));
    }
    Ok(acc)
}

/// The defining O(b^k) sum, used as the oracle for [`fourier_eval`].
///
/// For missing-digit and prescribed constraints this is
/// `sum e(n theta) 1(n)`; for a digit-sum residue class it is the character
/// sum `sum e(n theta + j s_b(n)/m)`.
pub fn naive_fourier_oracle(
    constraint: &DigitConstraint,
    theta: &Frequency,
    b: Base,
    k: u32,
) -> Result<Amplitude> {
    check_eval_args(constraint, b, k)?;
    let n = b.pow_bounded(k, MAX_ORACLE_POINTS, "naive oracle b^k")?;
    let t = Phase::from_frequency(theta);
    let mut odo = DigitOdometer::new(b, k, constraint);
    let mut acc = Complex64::ZERO;
    match constraint {
        DigitConstraint::DigitSumResidue { m, j, .. } => {
            for v in 0..n {
                let s = odo.digit_sum() % *m as u64;
                acc += t.mul_int(v).add_rational(s * *j as u64, *m as u64).e();
                odo.increment();
            }
        }
        _ => {
            for v in 0..n {
                if odo.satisfies() {
                    acc += t.mul_int(v).e();
                }
                odo.increment();
            }
        }
    }
    Ok(acc)
}

/// Derivative of the transform at `theta`, including the `2 pi i` factor,
/// via the product rule over the k levels; O(k^2 + k b) work.
pub fn fourier_derivative_eval(
    constraint: &DigitConstraint,
    theta: &Frequency,
    b: Base,
    k: u32,
) -> Result<Amplitude> {
    check_eval_args(constraint, b, k)?;
    fourier_derivative_at(constraint, Phase::from_frequency(theta), b, k)
}

pub(crate) fn fourier_derivative_at(
    constraint: &DigitConstraint,
    start: Phase,
    b: Base,
    k: u32,
) -> Result<Amplitude> {
    let mut factors = Vec::with_capacity(k as usize);
    let mut weighted = Vec::with_capacity(k as usize);
    let mut t = start;
    for level in 0..k {
        factors.push(constraint_factor(constraint, &t, b, level));
        weighted.push(constraint_factor_weighted(constraint, &t, b, level));
        t = t.mul_int(b.get() as u64);
    }

    let ku = k as usize;
    let mut prefix = vec![Complex64::ONE; ku + 1];
    for i in 0..ku {
        prefix[i + 1] = prefix[i] * factors[i];
    }
    let mut suffix = vec![Complex64::ONE; ku + 1];
    for i in (0..ku).rev() {
        suffix[i] = suffix[i + 1] * factors[i];
    }

    let mut sum = Complex64::ZERO;
    let mut b_pow = 1.0;
    for j in 0..ku {
        sum += b_pow * weighted[j] * prefix[j] * suffix[j + 1];
        b_pow *= b.get() as f64;
    }
    let out = Complex64::new(0.0, std::f64::consts::TAU) * sum;
    if !out.is_finite() {
        return Err(Error::NonFinite("fourier_derivative_eval"));
    }
    Ok(out)
}

/// Per-n transform weights for a constraint: the 0/1 indicator, or the
/// character weight `e(j s_b(n)/m)` for digit-sum classes.
pub(crate) fn constraint_weights(
    constraint: &DigitConstraint,
    b: Base,
    k: u32,
    n: u64,
) -> Vec<Complex64> {
    let mut odo = DigitOdometer::new(b, k, constraint);
    match constraint {
        DigitConstraint::DigitSumResidue { m, j, .. } => {
            let roots: Vec<Complex64> = (0..*m as u64)
                .map(|r| Phase::zero().add_rational(r, *m as u64).e())
                .collect();
            (0..n)
                .map(|_| {
                    let s = odo.digit_sum() % *m as u64;
                    let w = roots[((s * *j as u64) % *m as u64) as usize];
                    odo.increment();
                    w
                })
                .collect()
        }
        _ => (0..n)
            .map(|_| {
                let w = if odo.satisfies() {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                odo.increment();
                w
            })
            .collect(),
    }
}

/// 0/1 indicator weights regardless of constraint kind (digit-sum residue
/// classes included); used by identity checks on the indicator transform.
pub(crate) fn indicator_weights(
    constraint: &DigitConstraint,
    b: Base,
    k: u32,
    n: u64,
) -> Vec<Complex64> {
    let mut odo = DigitOdometer::new(b, k, constraint);
    match constraint {
        DigitConstraint::DigitSumResidue { m, a, .. } => (0..n)
            .map(|_| {
                let is_in = odo.digit_sum() % *m as u64 == *a as u64;
                odo.increment();
                if is_in {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                }
            })
            .collect(),
        _ => constraint_weights(constraint, b, k, n),
    }
}

/// All `b^k` transform values at the grid `a/b^k`, `0 <= a < b^k`, agreeing
/// with pointwise [`fourier_eval`].
pub fn full_spectrum(constraint: &DigitConstraint, b: Base, k: u32) -> Result<Vec<Amplitude>> {
    check_eval_args(constraint, b, k)?;
    let n = b.pow_bounded(k, MAX_SPECTRUM_POINTS, "full_spectrum b^k")?;
    let weights = constraint_weights(constraint, b, k, n);
    Ok(dft_radix(&weights, b.get() as usize))
}

// ---------------------------------------------------------------------------
// Radix-b decimation-in-time transform for lengths b^k.
// ---------------------------------------------------------------------------

enum Twiddles {
    Table(Vec<Complex64>),
    Lazy(usize),
}

impl Twiddles {
    fn new(n: usize) -> Twiddles {
        const TABLE_LIMIT: usize = 1 << 21;
        if n <= TABLE_LIMIT {
            let table = (0..n)
                .map(|p| {
                    let (s, c) = (std::f64::consts::TAU * p as f64 / n as f64).sin_cos();
                    Complex64::new(c, s)
                })
                .collect();
            Twiddles::Table(table)
        } else {
            Twiddles::Lazy(n)
        }
    }

    #[inline]
    fn at(&self, p: usize) -> Complex64 {
        match self {
            Twiddles::Table(t) => t[p],
            Twiddles::Lazy(n) => {
                let (s, c) = (std::f64::consts::TAU * p as f64 / *n as f64).sin_cos();
                Complex64::new(c, s)
            }
        }
    }
}

/// Forward transform `X[a] = sum_n x[n] e(n a / N)` for `N = b^k`,
/// by decimation over the digit levels; O(N k b) arithmetic.
pub(crate) fn dft_radix(input: &[Complex64], b: usize) -> Vec<Complex64> {
    let n = input.len();
    assert!(n > 0, "empty transform input");
    {
        // n must be a power of b
        let mut m = n;
        while m > 1 {
            assert!(
                m.is_multiple_of(b),
                "transform length {n} is not a power of {b}"
            );
            m /= b;
        }
    }
    let tw = Twiddles::new(n);
    let mut out = vec![Complex64::ZERO; n];
    dft_rec(input, 1, &mut out, b, n, &tw);
    out
}

/// Recursive step: computes `out[a] = sum_v input[v*stride] e(a*v*stride/N)`
/// for `a < len`, with `stride * len == N` throughout.
fn dft_rec(
    input: &[Complex64],
    stride: usize,
    out: &mut [Complex64],
    b: usize,
    total: usize,
    tw: &Twiddles,
) {
    let len = out.len();
    if len == 1 {
        out[0] = input[0];
        return;
    }
    let m = len / b;

    const PAR_THRESHOLD: usize = 1 << 13;
    if len >= PAR_THRESHOLD {
        out.par_chunks_mut(m).enumerate().for_each(|(r, chunk)| {
            dft_rec(&input[r * stride..], stride * b, chunk, b, total, tw);
        });
    } else {
        for (r, chunk) in out.chunks_mut(m).enumerate() {
            dft_rec(&input[r * stride..], stride * b, chunk, b, total, tw);
        }
    }

    // Combine: for each j < m the slots {r*m + j} hold the sub-transform
    // values Y_r[j]; they are gathered and overwritten in place.
    let mut gathered = vec![Complex64::ZERO; b];
    for j in 0..m {
        for r in 0..b {
            gathered[r] = out[r * m + j];
        }
        for t in 0..b {
            let a = j + t * m;
            let mut acc = Complex64::ZERO;
            for (r, &y) in gathered.iter().enumerate() {
                let p = (a as u128 * r as u128 * stride as u128 % total as u128) as usize;
                acc += tw.at(p) * y;
            }
            out[a] = acc;
        }
    }
}

/// Write a spectrum as CSV with the mandatory header `a,re,im,modulus`.
pub fn write_spectrum_csv<W: Write>(mut w: W, spectrum: &[Amplitude]) -> Result<()> {
    writeln!(w, "a,re,im,modulus")?;
    for (a, z) in spectrum.iter().enumerate() {
        writeln!(w, "{a},{},{},{}", z.re, z.im, z.norm())?;
    }
    Ok(())
}

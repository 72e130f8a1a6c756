//! Exponential sums over primes: `Lambda_hat_x(theta) = sum_{n<x} Lambda(n)
//! e(n theta)` by direct summation over prime powers, its full spectrum on
//! the grid `a/b^k`, the equidistribution sum `sum min(M, 1/||alpha n||)`,
//! and empirical fits of the implied constants in the two Vinogradov-style
//! bounds these sums satisfy.
//!
//! Direct summation is deliberate: at desk scale it is the strongest oracle
//! available, and the bound lemmas are verified as LHS/RHS ratios rather
//! than re-derived.

use crate::error::{Error, Result};
use crate::freq::{Frequency, Phase};
use crate::sieve::PrimeTable;
use crate::transforms::{dft_radix, Amplitude, MAX_SPECTRUM_POINTS};
use crate::{arith::gcd_u64, constraint::Base};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// `sum_{n<x} Lambda(n) e(n theta)`, O(pi(x)) work over the table.
pub fn lambda_hat(theta: &Frequency, x: u64, table: &PrimeTable) -> Result<Amplitude> {
    if x > table.limit() {
        return Err(Error::Precondition(format!(
            "lambda_hat x = {x} exceeds table limit {}",
            table.limit()
        )));
    }
    let t = Phase::from_frequency(theta);
    let entries = table.mangoldt_below(x);
    // Fixed-size chunks summed in order keep the reduction deterministic.
    let partials: Vec<Complex64> = entries
        .par_chunks(8192)
        .map(|chunk| {
            let mut acc = Complex64::ZERO;
            for &(n, v) in chunk {
                acc += v * t.mul_int(n).e();
            }
            acc
        })
        .collect();
    Ok(partials.into_iter().sum())
}

/// The transform of the length-`b^k` von Mangoldt sequence at every grid
/// frequency `a/b^k`, via the radix-b fast transform.
pub fn lambda_hat_spectrum(b: Base, k: u32, table: &PrimeTable) -> Result<Vec<Amplitude>> {
    let n = b.pow_bounded(k, MAX_SPECTRUM_POINTS, "lambda_hat_spectrum b^k")?;
    if n > table.limit() {
        return Err(Error::Precondition(format!(
            "lambda_hat_spectrum b^k = {n} exceeds table limit {}",
            table.limit()
        )));
    }
    let mut seq = vec![Complex64::ZERO; n as usize];
    for &(m, v) in table.mangoldt_below(n) {
        seq[m as usize] = Complex64::new(v, 0.0);
    }
    Ok(dft_radix(&seq, b.get() as usize))
}

/// `sum_{n=1}^{N} min(M, 1/||alpha n||)`; terms with `||alpha n|| = 0`
/// contribute `M` (the min caps the infinity).
pub fn equidistribution_sum(n_max: u64, m: f64, alpha: &Frequency) -> f64 {
    let t = Phase::from_frequency(alpha);
    let mut total = 0.0;
    for n in 1..=n_max {
        let dist = t.mul_int(n).dist_to_int();
        total += if dist <= 0.0 { m } else { m.min(1.0 / dist) };
    }
    total
}

/// Right-hand sides of the two bounds, with the implied constant set to 1.
#[derive(Debug, Clone, Copy)]
pub enum BoundRhs {
    /// `(N + N M d |beta| + 1/(d |beta|) + d) log N`
    Equidistribution { n: u64, m: f64, d: u64, beta: f64 },
    /// `(x^{4/5} + x^{1/2}/|d beta|^{1/2} + x |d beta|^{1/2}) (log x)^4`
    PrimeSum { x: u64, d: u64, beta: f64 },
}

pub fn bound_rhs(which: &BoundRhs) -> Result<f64> {
    match *which {
        BoundRhs::Equidistribution { n, m, d, beta } => {
            if beta == 0.0 {
                return Err(Error::Precondition(
                    "beta = 0: the 1/(d|beta|) term is infinite".into(),
                ));
            }
            let (nf, df, ab) = (n as f64, d as f64, beta.abs());
            Ok((nf + nf * m * df * ab + 1.0 / (df * ab) + df) * nf.ln())
        }
        BoundRhs::PrimeSum { x, d, beta } => {
            if beta == 0.0 {
                return Err(Error::Precondition(
                    "beta = 0: the x^{1/2}/|d beta|^{1/2} term is infinite".into(),
                ));
            }
            let (xf, db) = (x as f64, (d as f64 * beta.abs()).sqrt());
            Ok((xf.powf(0.8) + xf.sqrt() / db + xf * db) * xf.ln().powi(4))
        }
    }
}

/// One grid point for the equidistribution bound: `alpha = ell/d + beta`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquidistPoint {
    pub n: u64,
    pub m: f64,
    pub ell: i64,
    pub d: u64,
    pub beta: f64,
}

/// One grid point for the prime-sum bound: `alpha = ell/d + beta`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrimeSumPoint {
    pub x: u64,
    pub ell: i64,
    pub d: u64,
    pub beta: f64,
}

/// Effective-constant fit: exact left-hand sides against constant-1
/// right-hand sides over a parameter grid.
#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub params: Vec<(String, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundFit {
    pub rows: Vec<FitRow>,
    /// Max over the sample of lhs/rhs.
    pub fitted_constant: f64,
    pub median_ratio: f64,
    pub warnings: Vec<String>,
}

impl BoundFit {
    pub fn from_rows(rows: Vec<FitRow>, warnings: Vec<String>) -> Result<BoundFit> {
        if rows.is_empty() {
            return Err(Error::EmptyGrid("bound fit"));
        }
        for r in &rows {
            if !(r.lhs >= 0.0 && r.rhs > 0.0 && r.ratio.is_finite()) {
                return Err(Error::NonFinite("bound fit row"));
            }
        }
        let mut ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        ratios.sort_by(|a, b| a.total_cmp(b));
        let fitted_constant = *ratios.last().unwrap();
        let n = ratios.len();
        let median_ratio = if n % 2 == 1 {
            ratios[n / 2]
        } else {
            0.5 * (ratios[n / 2 - 1] + ratios[n / 2])
        };
        Ok(BoundFit {
            rows,
            fitted_constant,
            median_ratio,
            warnings,
        })
    }

    /// CSV dump: one row per grid point, `params..., lhs, rhs, ratio`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let names: Vec<&str> = self.rows[0].params.iter().map(|p| p.0.as_str()).collect();
        writeln!(w, "{},lhs,rhs,ratio", names.join(","))?;
        for r in &self.rows {
            for (_, v) in &r.params {
                write!(w, "{v},")?;
            }
            writeln!(w, "{},{},{}", r.lhs, r.rhs, r.ratio)?;
        }
        Ok(())
    }
}

fn check_point(ell: i64, d: u64, beta: f64) -> Result<()> {
    if d == 0 || gcd_u64(ell.unsigned_abs() % d, d) != 1 {
        return Err(Error::Precondition(format!(
            "grid point ell/d = {ell}/{d} is not a reduced fraction"
        )));
    }
    if beta.abs() >= 1.0 / (d as f64 * d as f64) {
        return Err(Error::Precondition(format!(
            "|beta| = {} violates the hypothesis |beta| < 1/d^2 at d = {d}",
            beta.abs()
        )));
    }
    Ok(())
}

/// Fit the implied constant of the equidistribution bound over a grid.
pub fn fit_equidistribution_constants(points: &[EquidistPoint]) -> Result<BoundFit> {
    if points.is_empty() {
        return Err(Error::EmptyGrid("equidistribution fit"));
    }
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        check_point(p.ell, p.d, p.beta)?;
        let rhs = match bound_rhs(&BoundRhs::Equidistribution {
            n: p.n,
            m: p.m,
            d: p.d,
            beta: p.beta,
        }) {
            Ok(v) => v,
            Err(_) => {
                warnings.push(format!(
                    "excluded row (N={}, d={}): beta = 0 makes the RHS infinite",
                    p.n, p.d
                ));
                continue;
            }
        };
        let alpha = Frequency::with_offset(p.ell, p.d, p.beta)?;
        let lhs = equidistribution_sum(p.n, p.m, &alpha);
        rows.push(FitRow {
            params: vec![
                ("n".into(), p.n as f64),
                ("m".into(), p.m),
                ("ell".into(), p.ell as f64),
                ("d".into(), p.d as f64),
                ("beta".into(), p.beta),
            ],
            lhs,
            rhs,
            ratio: lhs / rhs,
        });
    }
    BoundFit::from_rows(rows, warnings)
}

/// Fit the implied constant of the prime exponential-sum bound over a grid.
pub fn fit_prime_sum_constants(points: &[PrimeSumPoint], table: &PrimeTable) -> Result<BoundFit> {
    if points.is_empty() {
        return Err(Error::EmptyGrid("prime-sum fit"));
    }
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        check_point(p.ell, p.d, p.beta)?;
        let rhs = match bound_rhs(&BoundRhs::PrimeSum {
            x: p.x,
            d: p.d,
            beta: p.beta,
        }) {
            Ok(v) => v,
            Err(_) => {
                warnings.push(format!(
                    "excluded row (x={}, d={}): beta = 0 makes the RHS infinite",
                    p.x, p.d
                ));
                continue;
            }
        };
        let alpha = Frequency::with_offset(p.ell, p.d, p.beta)?;
        let lhs = lambda_hat(&alpha, p.x, table)?.norm();
        rows.push(FitRow {
            params: vec![
                ("x".into(), p.x as f64),
                ("ell".into(), p.ell as f64),
                ("d".into(), p.d as f64),
                ("beta".into(), p.beta),
            ],
            lhs,
            rhs,
            ratio: lhs / rhs,
        });
    }
    BoundFit::from_rows(rows, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::sieve_primes;

    fn table() -> PrimeTable {
        sieve_primes(100_000).unwrap()
    }

    #[test]
    fn lambda_hat_at_zero_is_psi() {
        let t = table();
        let v = lambda_hat(&Frequency::new(0, 1).unwrap(), 10, &t).unwrap();
        let psi10 = 3.0 * 2f64.ln() + 2.0 * 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((v.re - psi10).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn lambda_hat_at_half_alternates() {
        let t = table();
        let v = lambda_hat(&Frequency::new(1, 2).unwrap(), 10, &t).unwrap();
        // even prime powers (2, 4, 8) minus odd ones (3, 5, 7, 9)
        let expected = 3.0 * 2f64.ln() - (2.0 * 3f64.ln() + 5f64.ln() + 7f64.ln());
        assert!((v.re - expected).abs() < 1e-12);
        assert!((expected + 3.673).abs() < 1e-3);
    }

    #[test]
    fn lambda_hat_periodic_and_conjugate() {
        let t = table();
        let theta = Frequency::new(3, 7).unwrap();
        let v = lambda_hat(&theta, 5000, &t).unwrap();
        let w = lambda_hat(&Frequency::new(3 + 7, 7).unwrap(), 5000, &t).unwrap();
        assert_eq!(v, w);
        let c = lambda_hat(&theta.neg(), 5000, &t).unwrap();
        assert!((v.conj() - c).norm() < 1e-12 * v.norm().max(1.0));
    }

    #[test]
    fn lambda_hat_bounded_by_psi() {
        let t = table();
        for i in 0..40 {
            let theta = Frequency::new(i, 97).unwrap();
            let v = lambda_hat(&theta, 50_000, &t).unwrap().norm();
            assert!(v <= t.psi(49_999) + 1e-9);
        }
    }

    #[test]
    fn lambda_hat_rejects_beyond_table() {
        let t = sieve_primes(100).unwrap();
        assert!(lambda_hat(&Frequency::new(0, 1).unwrap(), 101, &t).is_err());
    }

    #[test]
    fn spectrum_entry_zero_is_psi_and_symmetry_holds() {
        let t = table();
        let b = Base::new(2).unwrap();
        let s = lambda_hat_spectrum(b, 4, &t).unwrap();
        assert_eq!(s.len(), 16);
        assert!((s[0].re - t.psi(15)).abs() < 1e-9);
        // conjugate symmetry of a real sequence
        for a in 1..16usize {
            assert!((s[a].conj() - s[16 - a]).norm() < 1e-9);
        }
        // entry at a = 8 is the value at theta = 1/2
        let v = lambda_hat(&Frequency::new(1, 2).unwrap(), 16, &t).unwrap();
        assert!((s[8] - v).norm() < 1e-9);
    }

    #[test]
    fn spectrum_consistent_with_pointwise() {
        let t = table();
        let b = Base::new(10).unwrap();
        let s = lambda_hat_spectrum(b, 3, &t).unwrap();
        for a in (0..1000).step_by(47) {
            let theta = Frequency::new(a as i64, 1000).unwrap();
            let v = lambda_hat(&theta, 1000, &t).unwrap();
            let denom = v.norm().max(1.0);
            assert!((s[a] - v).norm() / denom < 1e-7, "a={a}");
        }
    }

    #[test]
    fn equidistribution_hand_values() {
        let half = Frequency::new(1, 2).unwrap();
        assert_eq!(equidistribution_sum(2, 10.0, &half), 12.0);
        let third = Frequency::new(1, 3).unwrap();
        assert!((equidistribution_sum(3, 100.0, &third) - 106.0).abs() < 1e-9);
    }

    #[test]
    fn equidistribution_golden_ratio_stable() {
        let phi = Frequency::from_f64(0.618_033_988_749_894_8);
        let a = equidistribution_sum(100_000, 1000.0, &phi);
        let b = equidistribution_sum(100_000, 1000.0, &phi);
        assert!(a.is_finite() && a > 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn bound_rhs_printed_formula() {
        let rhs = bound_rhs(&BoundRhs::Equidistribution {
            n: 100,
            m: 10.0,
            d: 3,
            beta: 1e-4,
        })
        .unwrap();
        let by_hand = (100.0 + 100.0 * 10.0 * 3.0 * 1e-4 + 1.0 / 3e-4 + 3.0) * 100f64.ln();
        assert!((rhs - by_hand).abs() < 1e-9 * by_hand);
        assert!((rhs - 15826.46).abs() < 1.0);

        let rhs2 = bound_rhs(&BoundRhs::PrimeSum {
            x: 1_000_000,
            d: 10,
            beta: 1e-8,
        })
        .unwrap();
        let x = 1e6f64;
        let db = (10.0f64 * 1e-8).sqrt();
        let by_hand2 = (x.powf(0.8) + x.sqrt() / db + x * db) * x.ln().powi(4);
        assert!((rhs2 - by_hand2).abs() < 1e-9 * by_hand2);
    }

    #[test]
    fn bound_rhs_dominated_by_n_log_n() {
        // d = 1, beta = 1/(2N), M = 1: the terms are N + 1/2 + 2N + 1, so
        // the whole expression is (3N + 3/2) log N, order N log N.
        let n = 10_000u64;
        let beta = 1.0 / (2.0 * n as f64);
        let rhs = bound_rhs(&BoundRhs::Equidistribution {
            n,
            m: 1.0,
            d: 1,
            beta,
        })
        .unwrap();
        let nlogn = n as f64 * (n as f64).ln();
        assert!((rhs / nlogn - 3.0).abs() < 0.01);
    }

    #[test]
    fn bound_rhs_rejects_zero_beta() {
        assert!(bound_rhs(&BoundRhs::Equidistribution {
            n: 10,
            m: 1.0,
            d: 1,
            beta: 0.0
        })
        .is_err());
        assert!(bound_rhs(&BoundRhs::PrimeSum {
            x: 10,
            d: 1,
            beta: 0.0
        })
        .is_err());
    }

    #[test]
    fn single_point_fit_is_finite() {
        let t = table();
        let fit = fit_prime_sum_constants(
            &[PrimeSumPoint {
                x: 50_000,
                ell: 0,
                d: 1,
                beta: 1e-9,
            }],
            &t,
        )
        .unwrap();
        assert_eq!(fit.rows.len(), 1);
        assert!(fit.fitted_constant.is_finite());
        assert_eq!(fit.fitted_constant, fit.rows[0].ratio);
    }

    #[test]
    fn zero_beta_rows_are_excluded_with_warning() {
        let pts = [
            EquidistPoint {
                n: 100,
                m: 5.0,
                ell: 1,
                d: 3,
                beta: 1e-3,
            },
            EquidistPoint {
                n: 100,
                m: 5.0,
                ell: 1,
                d: 3,
                beta: 0.0,
            },
        ];
        let fit = fit_equidistribution_constants(&pts).unwrap();
        assert_eq!(fit.rows.len(), 1);
        assert_eq!(fit.warnings.len(), 1);
    }

    #[test]
    fn fit_rejects_bad_hypotheses() {
        // |beta| >= 1/d^2
        let pts = [EquidistPoint {
            n: 100,
            m: 5.0,
            ell: 1,
            d: 10,
            beta: 0.5,
        }];
        assert!(fit_equidistribution_constants(&pts).is_err());
        // ell/d not reduced
        let pts = [EquidistPoint {
            n: 100,
            m: 5.0,
            ell: 2,
            d: 4,
            beta: 1e-9,
        }];
        assert!(fit_equidistribution_constants(&pts).is_err());
        assert!(fit_equidistribution_constants(&[]).is_err());
    }

    #[test]
    fn subset_ratios_below_full_grid_constant() {
        let t = table();
        let mut full = Vec::new();
        for (d, x) in [(3u64, 50_000u64), (7, 80_000), (11, 99_000), (2, 60_000)] {
            full.push(PrimeSumPoint {
                x,
                ell: 1,
                d,
                beta: 1.0 / (d as f64 * 1e7),
            });
        }
        let fit_full = fit_prime_sum_constants(&full, &t).unwrap();
        let fit_sub = fit_prime_sum_constants(&full[..2], &t).unwrap();
        assert!(fit_sub.fitted_constant <= fit_full.fitted_constant + 1e-12);
        assert!(fit_full.fitted_constant >= fit_full.median_ratio);
    }

    #[test]
    fn bound_fit_csv_shape() {
        let t = table();
        let fit = fit_prime_sum_constants(
            &[PrimeSumPoint {
                x: 10_000,
                ell: 1,
                d: 3,
                beta: 1e-6,
            }],
            &t,
        )
        .unwrap();
        let mut buf = Vec::new();
        fit.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,ell,d,beta,lhs,rhs,ratio\n"));
        assert_eq!(text.lines().count(), 2);
    }
}

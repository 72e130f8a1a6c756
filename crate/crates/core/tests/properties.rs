//! Property tests for the contracts that hold over the whole input space:
//! the Dirichlet approximation inequalities, the digit-product
//! factorization identity, and the basic symmetries of the transforms.

use digitprimes::arith::{gcd_u64, nearest_int_distance};
use digitprimes::constraint::{Base, DigitConstraint};
use digitprimes::freq::{dirichlet_approx, Frequency};
use digitprimes::prime_sums::lambda_hat;
use digitprimes::sieve::{sieve_primes, PrimeTable};
use digitprimes::transforms::fourier_eval;
use proptest::prelude::*;
use std::sync::LazyLock;

static TABLE: LazyLock<PrimeTable> = LazyLock::new(|| sieve_primes(100_000).unwrap());

proptest! {
    #[test]
    fn nearest_int_distance_range_and_symmetry(x in -1e9f64..1e9) {
        let d = nearest_int_distance(x);
        prop_assert!((0.0..=0.5).contains(&d));
        prop_assert!((nearest_int_distance(-x) - d).abs() < 1e-12);
        prop_assert!(nearest_int_distance(x + 1.0) - d < 1e-6);
    }

    #[test]
    fn dirichlet_contract_holds(x in 0.0f64..1.0, d0 in 1u64..=1_000_000) {
        let alpha = Frequency::from_f64(x);
        let a = dirichlet_approx(&alpha, d0).unwrap();
        prop_assert!(a.d >= 1 && a.d <= d0);
        prop_assert_eq!(gcd_u64(a.ell.unsigned_abs() % a.d.max(1), a.d), 1);
        let err = (alpha.value() - a.ell as f64 / a.d as f64).abs();
        prop_assert!(err < 1.0 / (a.d as f64 * d0 as f64));
        // reconstruction
        prop_assert!((a.value() - alpha.value()).abs() < 1e-12);
    }

    #[test]
    fn transform_factorizes_across_levels(
        x in 0.0f64..1.0,
        k1 in 0u32..=4,
        a0 in 0u32..10,
    ) {
        let b = Base::new(10).unwrap();
        let k = 4u32;
        let c = DigitConstraint::missing_digit(a0);
        let theta = Frequency::from_f64(x);
        let whole = fourier_eval(&c, &theta, b, k).unwrap();
        let low = if k - k1 > 0 {
            fourier_eval(&c, &theta, b, k - k1).unwrap()
        } else {
            num_complex::Complex64::ONE
        };
        let high = if k1 > 0 {
            fourier_eval(&c, &theta.scaled(10u64.pow(k - k1)), b, k1).unwrap()
        } else {
            num_complex::Complex64::ONE
        };
        let err = (whole - low * high).norm() / whole.norm().max(1.0);
        prop_assert!(err < 1e-10, "split at {} gave rel err {}", k1, err);
    }

    #[test]
    fn transform_conjugate_at_negated_frequency(num in 0i64..1000, a0 in 0u32..10) {
        let b = Base::new(10).unwrap();
        let theta = Frequency::new(num, 1000).unwrap();
        let c = DigitConstraint::missing_digit(a0);
        let v = fourier_eval(&c, &theta, b, 3).unwrap();
        let w = fourier_eval(&c, &theta.neg(), b, 3).unwrap();
        prop_assert!((v.conj() - w).norm() < 1e-9 * v.norm().max(1.0));
    }

    #[test]
    fn transform_trivial_bound(x in 0.0f64..1.0, a0 in 0u32..10, k in 1u32..=5) {
        let b = Base::new(10).unwrap();
        let c = DigitConstraint::missing_digit(a0);
        let v = fourier_eval(&c, &Frequency::from_f64(x), b, k).unwrap();
        prop_assert!(v.norm() <= 9f64.powi(k as i32) * (1.0 + 1e-12));
    }

    #[test]
    fn lambda_hat_periodic_conjugate(num in 0i64..500, x in 1000u64..50_000) {
        let theta = Frequency::new(num, 500).unwrap();
        let v = lambda_hat(&theta, x, &TABLE).unwrap();
        let w = lambda_hat(&theta.neg(), x, &TABLE).unwrap();
        prop_assert!((v.conj() - w).norm() < 1e-9 * v.norm().max(1.0));
        prop_assert!(v.norm() <= TABLE.psi(x - 1) + 1e-6);
    }
}

#[test]
fn psi_tracks_x_at_scale() {
    // |psi(x) - x| / x stays below 1% across the sampled range.
    let t = sieve_primes(10_000_000).unwrap();
    for exp in 6..=7u32 {
        let x = 10u64.pow(exp);
        let rel = (t.psi(x) - x as f64).abs() / x as f64;
        assert!(rel < 0.01, "psi deviation {rel} at 10^{exp}");
    }
}

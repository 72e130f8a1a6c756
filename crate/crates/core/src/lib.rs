//! Counting primes with digit constraints.
//!
//! This crate implements the computational side of the circle method for
//! digit problems: exact product-formula Fourier transforms of digit
//! constraints, prime exponential sums over a segmented sieve, major/minor
//! arc decompositions, and numerical verification of the supporting bound
//! lemmas against brute-force oracles.
//!
//! The pieces:
//!
//! * [`sieve`] — segmented prime sieve, von Mangoldt values, psi sums;
//! * [`freq`] — exact frequencies on R/Z and Dirichlet approximation;
//! * [`constraint`] — the three digit constraint kinds and counting oracles;
//! * [`transforms`] — product-formula transforms, naive oracle, spectra;
//! * [`prime_sums`] — `Lambda_hat` sums and equidistribution bound fits;
//! * [`circle`] — arc decomposition, main terms, inversion identities,
//!   and end-to-end estimators;
//! * [`bounds`] — numerical verification of the L1 / large-sieve / hybrid /
//!   L-infinity lemmas.

pub mod arith;
pub mod bounds;
pub mod circle;
pub mod constraint;
pub mod error;
pub mod freq;
pub mod prime_sums;
pub mod sieve;
pub mod transforms;

pub use arith::{euler_phi_moebius, nearest_int_distance, Ratio};
pub use constraint::{count_constrained_primes, digit_sum, Base, DigitConstraint};
pub use error::{Error, Result};
pub use freq::{dirichlet_approx, Frequency, RationalApprox};
pub use sieve::{sieve_primes, sieve_primes_cached, PrimeTable};
pub use transforms::{
    fourier_derivative_eval, fourier_eval, full_spectrum, naive_fourier_oracle, Amplitude,
};

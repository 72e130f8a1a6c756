//! The Hardy-Littlewood assembly: frequency-side inversion identities,
//! major/minor arc classification, closed-form main terms, minor-arc
//! aggregates against their bounds, and end-to-end estimates compared with
//! the brute-force counting oracle.

use crate::arith::{euler_phi_moebius, gcd_u64, Ratio};
use crate::bounds::ExponentSet;
use crate::constraint::{count_constrained_primes, Base, DigitConstraint, DigitOdometer};
use crate::error::{Error, Result};
use crate::freq::{dirichlet_approx, Frequency, RationalApprox};
use crate::prime_sums::{lambda_hat, lambda_hat_spectrum};
use crate::sieve::PrimeTable;
use crate::transforms::{dft_radix, fourier_eval, full_spectrum, indicator_weights};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Maximum `b^k` for a full arc classification.
pub const MAX_ARC_POINTS: u64 = 10_000_000;

/// Maximum `b^k` for the exact spectrum-based identity checks.
pub const MAX_IDENTITY_POINTS: u64 = 10_000_000;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ArcLabel {
    Major,
    Minor,
}

/// Classification of every frequency `a/b^k` by its Dirichlet approximation:
/// the arc at `a` is major iff `max(d, b^k |beta|) < threshold`.
///
/// Labels are stored densely; the approximation behind a label is
/// deterministic and is recomputed on demand by [`ArcDecomposition::arc`]
/// rather than stored, which keeps the structure usable at `b^k = 10^7`.
pub struct ArcDecomposition {
    pub b: Base,
    pub k: u32,
    pub d0: u64,
    pub threshold: f64,
    labels: Vec<ArcLabel>,
    major_count: u64,
    minor_count: u64,
}

impl ArcDecomposition {
    pub fn major_count(&self) -> u64 {
        self.major_count
    }

    pub fn minor_count(&self) -> u64 {
        self.minor_count
    }

    pub fn len(&self) -> u64 {
        self.labels.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, a: u64) -> ArcLabel {
        self.labels[a as usize]
    }

    /// Label and Dirichlet data for the frequency `a/b^k`.
    pub fn arc(&self, a: u64) -> Result<(ArcLabel, RationalApprox)> {
        let n = self.b.pow(self.k)?;
        let approx = dirichlet_approx(&Frequency::new(a as i64, n)?, self.d0)?;
        Ok((self.labels[a as usize], approx))
    }
}

fn classify_one(a: u64, n: u64, d0: u64, threshold: f64) -> Result<ArcLabel> {
    let approx = dirichlet_approx(&Frequency::new(a as i64, n)?, d0)?;
    let quality = (approx.d as f64).max(n as f64 * approx.beta.abs());
    Ok(if quality < threshold {
        ArcLabel::Major
    } else {
        ArcLabel::Minor
    })
}

/// Classify all `a in [0, b^k)`; deterministic in inputs.
pub fn classify_arcs(b: Base, k: u32, threshold: f64, d0: u64) -> Result<ArcDecomposition> {
    if threshold < 1.0 {
        return Err(Error::Precondition(format!(
            "arc threshold {threshold} must be >= 1"
        )));
    }
    let n = b.pow_bounded(k, MAX_ARC_POINTS, "classify_arcs b^k")?;
    let root = (n as f64).sqrt().ceil() as u64;
    if d0 > root.max(1) {
        return Err(Error::Precondition(format!(
            "d0 = {d0} exceeds b^(k/2) = {root}"
        )));
    }
    let labels: Vec<ArcLabel> = (0..n)
        .into_par_iter()
        .map(|a| classify_one(a, n, d0, threshold))
        .collect::<Result<_>>()?;
    let major_count = labels.iter().filter(|&&l| l == ArcLabel::Major).count() as u64;
    let minor_count = n - major_count;
    Ok(ArcDecomposition {
        b,
        k,
        d0,
        threshold,
        labels,
        major_count,
        minor_count,
    })
}

/// Default Dirichlet quality `b^{floor(k/2)}`.
pub fn default_d0(b: Base, k: u32) -> u64 {
    (b.get() as u64).pow(k / 2)
}

/// The major-arc density constant for missing-digit primes.
pub fn kappa(b: Base, a0: u32) -> Result<Ratio> {
    if a0 >= b.get() {
        return Err(Error::Constraint(format!(
            "digit {a0} is not a base-{} digit",
            b.get()
        )));
    }
    let bb = b.get() as u64;
    Ok(if gcd_u64(a0 as u64, bb) != 1 {
        Ratio::new(bb as u128, bb as u128 - 1)
    } else {
        let (phi, _) = euler_phi_moebius(bb)?;
        Ratio::new(
            bb as u128 * (phi as u128 - 1),
            (bb as u128 - 1) * phi as u128,
        )
    })
}

/// Main-term data for an estimate: the density constant, the main term
/// itself, the character saving exponent, and the L-infinity constant
/// carried along from the bound fits.
#[derive(Debug, Clone, Serialize)]
pub struct MainTermData {
    pub kappa: Ratio,
    pub main_term: f64,
    /// Arithmetic-progression route: `(b/phi(b)) * sum over allowed final
    /// digits of the class counts`; agrees exactly with `main_term` for
    /// missing-digit constraints.
    pub ap_form: f64,
    pub delta: f64,
    pub c_b: f64,
    pub log_power: f64,
}

/// Exact count of integers below `b^k` with no digit `a0` and final digit
/// `last`: by enumeration at small scale, combinatorially beyond.
fn missing_digit_class_count(b: Base, k: u32, a0: u32, last: u32) -> u128 {
    if last == a0 {
        return 0;
    }
    let n = (b.get() as u128).pow(k);
    if n <= 1_000_000 {
        let c = DigitConstraint::missing_digit(a0);
        let mut odo = DigitOdometer::new(b, k, &c);
        let mut count = 0u128;
        for v in 0..n as u64 {
            if odo.satisfies() && v % b.get() as u64 == last as u64 {
                count += 1;
            }
            odo.increment();
        }
        count
    } else {
        (b.get() as u128 - 1).pow(k - 1)
    }
}

/// Closed-form major-arc main term `kappa * (b-1)^k` for the missing-digit
/// problem, cross-checked against the arithmetic-progression sum; the two
/// routes are computed as exact rationals and must agree exactly.
pub fn major_arc_main_term(
    b: Base,
    k: u32,
    a0: u32,
    log_power: f64,
    c_b: f64,
) -> Result<MainTermData> {
    if k == 0 {
        return Err(Error::Precondition("k must be >= 1".into()));
    }
    let kap = kappa(b, a0)?;
    let closed = kap.mul_int((b.get() as u128 - 1).pow(k));

    let (phi, _) = euler_phi_moebius(b.get() as u64)?;
    let mut class_total = 0u128;
    for last in 1..b.get() {
        if gcd_u64(last as u64, b.get() as u64) == 1 && last != a0 {
            class_total += missing_digit_class_count(b, k, a0, last);
        }
    }
    let ap = Ratio::new(b.get() as u128 * class_total, phi as u128);

    if closed != ap {
        return Err(Error::NonFinite("main-term route disagreement"));
    }
    Ok(MainTermData {
        kappa: kap,
        main_term: closed.to_f64(),
        ap_form: ap.to_f64(),
        delta: 0.0,
        c_b,
        log_power,
    })
}

/// Character saving exponent `||(b-1) j/m||^2 / (4 b^4)`, computed exactly.
pub fn delta_for_character(b: Base, j: u32, m: u32) -> f64 {
    assert!(m > 0);
    let r = ((b.get() as u64 - 1) * j as u64) % m as u64;
    let dist = r.min(m as u64 - r) as f64 / m as f64;
    dist * dist / (4.0 * (b.get() as f64).powi(4))
}

/// Result of the exact Fourier-inversion identity check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InversionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    /// Imaginary residual of the spectrum dot product; should be noise.
    pub imag_residual: f64,
}

/// Check `sum Lambda(n) 1_A(n) = (1/b^k) sum_a 1_hat(a/b^k)
/// Lambda_hat(-a/b^k)` with both sides computed independently.
pub fn inversion_identity_check(
    constraint: &DigitConstraint,
    b: Base,
    k: u32,
    table: &PrimeTable,
) -> Result<InversionCheck> {
    constraint.validate(b, k)?;
    let n = b.pow_bounded(k, MAX_IDENTITY_POINTS, "inversion_identity_check b^k")?;
    let lhs = count_constrained_primes(constraint, b, k, true, table)?;

    let ind = indicator_weights(constraint, b, k, n);
    let ind_spec = dft_radix(&ind, b.get() as usize);
    let lam_spec = lambda_hat_spectrum(b, k, table)?;
    let dot: Complex64 = ind_spec
        .iter()
        .zip(&lam_spec)
        .map(|(s, l)| s * l.conj())
        .sum();
    let rhs = dot / n as f64;

    Ok(InversionCheck {
        lhs,
        rhs: rhs.re,
        rel_err: (lhs - rhs.re).abs() / lhs.max(1.0),
        imag_residual: rhs.im.abs() / lhs.max(1.0),
    })
}

/// The character decomposition of a digit-sum residue count.
#[derive(Debug, Clone, Serialize)]
pub struct CharacterDecomposition {
    pub main: f64,
    pub character_terms: Vec<f64>,
    pub total: f64,
    /// Direct weighted count; the decomposition is an identity, so `total`
    /// must equal this to float tolerance.
    pub oracle: f64,
    pub imag_residual: f64,
}

/// Evaluate `sum_{n<b^k, s_b(n)=a (m)} Lambda(n)` as the uniform main term
/// plus one frequency-side dot product per nontrivial character.
pub fn digit_sum_character_decomposition(
    b: Base,
    k: u32,
    m: u32,
    a: u32,
    table: &PrimeTable,
) -> Result<CharacterDecomposition> {
    let constraint = DigitConstraint::digit_sum_residue(m, a);
    constraint.validate(b, k)?;
    let n = b.pow_bounded(k, MAX_IDENTITY_POINTS, "character decomposition b^k")?;
    if n > table.limit() {
        return Err(Error::Precondition(format!(
            "b^k = {n} exceeds table limit {}",
            table.limit()
        )));
    }

    let main = table.psi(n - 1) / m as f64;
    let mut character_terms = Vec::with_capacity(m as usize - 1);
    let mut imag = 0.0f64;
    if m > 1 {
        let lam_spec = lambda_hat_spectrum(b, k, table)?;
        for j in 1..m {
            let g_spec = full_spectrum(&constraint.clone().with_character(j), b, k)?;
            let dot: Complex64 = g_spec
                .iter()
                .zip(&lam_spec)
                .map(|(g, l)| g * l.conj())
                .sum();
            // e(-a j/m) / (m b^k) * dot
            let twist = Frequency::new(-((a as i64) * j as i64), m as u64)?;
            let term = Complex64::from_polar(1.0, std::f64::consts::TAU * twist.value()) * dot
                / (m as f64 * n as f64);
            character_terms.push(term.re);
            imag += term.im;
        }
    }
    let total = main + character_terms.iter().sum::<f64>();
    let oracle = count_constrained_primes(&constraint, b, k, true, table)?;
    Ok(CharacterDecomposition {
        main,
        character_terms,
        total,
        oracle,
        imag_residual: imag.abs() / oracle.max(1.0),
    })
}

/// One eta-regime row of a minor-arc aggregate.
#[derive(Debug, Clone, Serialize)]
pub struct MinorArcRegime {
    pub regime: String,
    pub points: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinorArcReport {
    pub kind: String,
    pub b: u32,
    pub k: u32,
    pub d_range: u64,
    pub eta_range: f64,
    pub d0: u64,
    pub regimes: Vec<MinorArcRegime>,
    pub warnings: Vec<String>,
}

/// Exact minor-arc sums `sum |f_hat(l/d + eta/b^k) Lambda_hat(...)|` over
/// `d ~ D` and an eta regime, against the corresponding bound with the
/// fitted exponents. Out-of-range parameters are recorded as warnings and
/// the enumeration proceeds (exploratory mode).
#[allow(clippy::too_many_arguments)]
pub fn minor_arc_report(
    kind: &DigitConstraint,
    b: Base,
    k: u32,
    d_range: u64,
    eta_range: f64,
    d0: u64,
    exponents: &ExponentSet,
    table: &PrimeTable,
) -> Result<MinorArcReport> {
    kind.validate(b, k)?;
    let n = b.pow_bounded(k, MAX_IDENTITY_POINTS, "minor_arc_report b^k")?;
    if n > table.limit() {
        return Err(Error::Precondition(format!(
            "b^k = {n} exceeds table limit {}",
            table.limit()
        )));
    }
    if d_range == 0 {
        return Err(Error::Precondition("D must be >= 1".into()));
    }
    let mut warnings = Vec::new();
    if eta_range < 1.0 {
        warnings.push(format!("B = {eta_range} below the range B >> 1"));
    }
    if eta_range > n as f64 / (d0 as f64 * d_range as f64) {
        warnings.push(format!(
            "B = {eta_range} above the range B << b^k/(D0 D) = {}",
            n as f64 / (d0 as f64 * d_range as f64)
        ));
    }
    if d_range > d0 {
        warnings.push(format!("D = {d_range} above D0 = {d0}"));
    }
    if (d0 as f64) > (n as f64).sqrt() * (1.0 + 1e-9) {
        warnings.push(format!("D0 = {d0} above b^(k/2) = {}", (n as f64).sqrt()));
    }

    let (use_character, exponent, trivial) = match kind {
        DigitConstraint::MissingDigit { .. } => (
            false,
            exponents.alpha_b,
            ((b.get() - 1) as f64).powi(k as i32) * (n as f64),
        ),
        DigitConstraint::DigitSumResidue { .. } => {
            (true, exponents.beta_b, (n as f64) * (n as f64))
        }
        DigitConstraint::PrescribedDigits { .. } => {
            return Err(Error::Unsupported(
                "minor-arc aggregates cover missing-digit and digit-sum kinds".into(),
            ))
        }
    };
    let _ = use_character;

    let k4 = (k as f64).powi(4);
    let dyadic_rhs = trivial
        * k4
        * ((d_range as f64 * eta_range).powf(exponent - 0.2)
            + (b.get() as f64).powf(k as f64 * exponent) / (d0 as f64).sqrt());
    let near_rhs = trivial
        * k4
        * ((d_range as f64).powf(exponent - 0.2)
            + (d0 as f64).powf(0.5 + 2.0 * exponent) / (n as f64).sqrt());

    let mut regimes = Vec::new();
    for (regime, lo, hi) in [
        ("eta_near_one".to_string(), 0.0, 1.0),
        ("eta_dyadic".to_string(), eta_range, 2.0 * eta_range),
    ] {
        let mut lhs = 0.0;
        let mut points = 0usize;
        for d in d_range..2 * d_range {
            for ell in 1..d {
                if gcd_u64(ell, d) != 1 {
                    continue;
                }
                let num = n as u128 * ell as u128;
                let base = (num / d as u128) as i64;
                let rem = (num % d as u128) as f64 / d as f64;
                let t_lo = (-hi + rem).floor() as i64 - 1;
                let t_hi = (hi + rem).ceil() as i64 + 1;
                for t in t_lo..=t_hi {
                    let eta = t as f64 - rem;
                    let in_regime = if lo == 0.0 {
                        eta.abs() <= hi
                    } else {
                        eta.abs() >= lo && eta.abs() < hi
                    };
                    if !in_regime {
                        continue;
                    }
                    let a = (base + t).rem_euclid(n as i64);
                    let theta = Frequency::new(a, n)?;
                    let fh = fourier_eval(kind, &theta, b, k)?.norm();
                    let lh = lambda_hat(&theta, n, table)?.norm();
                    lhs += fh * lh;
                    points += 1;
                }
            }
        }
        let rhs = if lo == 0.0 { near_rhs } else { dyadic_rhs };
        regimes.push(MinorArcRegime {
            regime,
            points,
            lhs,
            rhs,
            ratio: lhs / rhs,
        });
    }

    Ok(MinorArcReport {
        kind: kind.kind_name().into(),
        b: b.get(),
        k,
        d_range,
        eta_range,
        d0,
        regimes,
        warnings,
    })
}

/// Configuration for an end-to-end estimate.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateConfig {
    pub weighted: bool,
    /// `A` in the log-power arc threshold for missing-digit estimates.
    pub log_power: f64,
    pub d0: Option<u64>,
    pub threshold: Option<f64>,
    pub exponents: ExponentSet,
    /// Whether to run the full arc classification for the report.
    pub classify: bool,
}

impl EstimateConfig {
    pub fn new(exponents: ExponentSet) -> EstimateConfig {
        EstimateConfig {
            weighted: true,
            log_power: 8.0,
            d0: None,
            threshold: None,
            exponents,
            classify: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcCounts {
    pub major_count: u64,
    pub minor_count: u64,
}

/// An end-to-end estimate report: main-term prediction, bound-side error
/// budget, and the exact oracle when the scale permits.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub constraint: DigitConstraint,
    pub b: u32,
    pub k: u32,
    pub weighted: bool,
    pub prediction: f64,
    pub error_budget: f64,
    pub oracle: Option<f64>,
    pub ratio: Option<f64>,
    pub realized_error: Option<f64>,
    pub arcs: Option<ArcCounts>,
    pub d0: u64,
    pub threshold: f64,
}

/// Predict the constrained prime count/mass from the main term, budget the
/// error from the minor/major arc bounds with fitted constants, and compare
/// against the counting oracle when `b^k` is inside the table.
pub fn estimate_count(
    constraint: &DigitConstraint,
    b: Base,
    k: u32,
    config: &EstimateConfig,
    table: &PrimeTable,
) -> Result<EstimateReport> {
    constraint.validate(b, k)?;
    if k == 0 {
        return Err(Error::Precondition("k must be >= 1".into()));
    }
    let n = b.pow(k)?;
    let bf = b.get() as f64;
    let kf = k as f64;
    let log_n = kf * bf.ln();
    let d0 = config.d0.unwrap_or_else(|| default_d0(b, k));
    let exps = &config.exponents;

    let (weighted_main, threshold, error_budget) = match constraint {
        DigitConstraint::MissingDigit { a0 } => {
            let main = major_arc_main_term(b, k, *a0, config.log_power, exps.c_b)?;
            let threshold = config
                .threshold
                .unwrap_or_else(|| log_n.powf(config.log_power));
            let trivial = (bf - 1.0).powi(k as i32);
            let a_pow = config.log_power;
            let budget = exps.c_fit
                * trivial
                * (1.0 / log_n.powf(a_pow)
                    + kf.powi(4) / log_n.powf(a_pow * (0.2 - exps.alpha_b))
                    + kf.powi(5) * bf.powf(kf * exps.alpha_b) / (d0 as f64).sqrt()
                    + kf.powi(5) * (d0 as f64).powf(0.5 + 2.0 * exps.alpha_b) / bf.powf(kf / 2.0));
            (main.main_term, threshold, budget)
        }
        DigitConstraint::DigitSumResidue { m, .. } => {
            let psi = if n <= table.limit() {
                table.psi(n - 1)
            } else {
                n as f64
            };
            let delta = (1..*m)
                .map(|j| delta_for_character(b, j, *m))
                .fold(f64::INFINITY, f64::min);
            let threshold = config
                .threshold
                .unwrap_or_else(|| bf.powf(kf * delta / 4.0).max(1.0));
            let nf = n as f64;
            let budget = exps.c_fit
                * (nf / bf.powf(kf * delta / 4.0)
                    + kf.powi(4) * nf / bf.powf(kf * delta * (0.2 - exps.beta_b) / 4.0)
                    + nf * kf.powi(4) * (d0 as f64).powf(0.5 + 2.0 * exps.beta_b)
                        / bf.powf(kf / 2.0)
                    + kf.powi(4) * nf * bf.powf(kf * exps.beta_b) / (d0 as f64).sqrt());
            (psi / *m as f64, threshold, budget)
        }
        DigitConstraint::PrescribedDigits { .. } => {
            return Err(Error::Unsupported(
                "prescribed-digit estimates need L-function input beyond this toolkit; \
                 the counting oracle is still available"
                    .into(),
            ))
        }
    };

    let prediction = if config.weighted {
        weighted_main
    } else {
        weighted_main / log_n
    };

    let (oracle, ratio, realized_error) = if n <= table.limit() {
        let o = count_constrained_primes(constraint, b, k, config.weighted, table)?;
        (Some(o), Some(o / prediction), Some((o - prediction).abs()))
    } else {
        (None, None, None)
    };

    let arcs = if config.classify && n <= MAX_ARC_POINTS {
        let dec = classify_arcs(b, k, threshold.max(1.0), d0)?;
        Some(ArcCounts {
            major_count: dec.major_count(),
            minor_count: dec.minor_count(),
        })
    } else {
        None
    };

    Ok(EstimateReport {
        constraint: constraint.clone(),
        b: b.get(),
        k,
        weighted: config.weighted,
        prediction,
        error_budget,
        oracle,
        ratio,
        realized_error,
        arcs,
        d0,
        threshold,
    })
}

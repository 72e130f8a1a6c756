//! Command-line front end for the digitprimes toolkit: counting oracles,
//! transform evaluations, spectra, arc decompositions, end-to-end estimates,
//! and the bound-lemma verifiers, all emitting machine-readable reports.
//!
//! Exit codes: 0 on success, 1 on usage or resource errors, 2 when a
//! verification assertion fails.

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use digitprimes::bounds::{
    single_digit_inequalities, verify_hybrid, verify_l1, verify_large_sieve, verify_linf_character,
    verify_linf_rational, ExponentSet,
};
use digitprimes::circle::{
    classify_arcs, default_d0, digit_sum_character_decomposition, estimate_count,
    inversion_identity_check, kappa, minor_arc_report, ArcLabel, EstimateConfig,
};
use digitprimes::constraint::{count_constrained_primes, Base, DigitConstraint};
use digitprimes::freq::Frequency;
use digitprimes::prime_sums::{
    fit_equidistribution_constants, fit_prime_sum_constants, lambda_hat_spectrum, BoundFit,
    EquidistPoint, PrimeSumPoint,
};
use digitprimes::sieve::{sieve_primes_cached, PrimeTable};
use digitprimes::transforms::{
    fourier_derivative_eval, fourier_eval, full_spectrum, naive_fourier_oracle, Amplitude,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "digitprimes",
    version,
    about = "Counting primes with digit constraints: transforms, arcs, estimates, bound checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the JSON/CSV report to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Report format where both are supported.
    #[arg(long, global = true, default_value = "json")]
    format: Format,

    /// Validate arguments and print the resolved plan without computing.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Cap internal parallelism (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Seed for sampled grids; a fixed seed gives identical reports.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ConstraintArgs {
    /// Missing-digit constraint: the excluded digit a0.
    #[arg(long, value_name = "A0")]
    missing_digit: Option<u32>,

    /// Digit-sum residue constraint "m,a": s_b(n) = a (mod m).
    #[arg(long, value_name = "M,A")]
    digit_sum: Option<String>,

    /// Character index j (frequency j/m) for digit-sum transforms.
    #[arg(long, value_name = "J")]
    character: Option<u32>,

    /// Prescribed digits "pos=digit,pos=digit,..." (pos 0 = least significant).
    #[arg(long, value_name = "POS=DIGIT,...")]
    prescribed: Option<String>,
}

impl ConstraintArgs {
    fn build(&self) -> anyhow::Result<DigitConstraint> {
        let picked = [
            self.missing_digit.is_some(),
            self.digit_sum.is_some(),
            self.prescribed.is_some(),
        ]
        .iter()
        .filter(|&&x| x)
        .count();
        if picked != 1 {
            return Err(anyhow!(
                "exactly one of --missing-digit, --digit-sum, --prescribed is required"
            ));
        }
        if let Some(a0) = self.missing_digit {
            return Ok(DigitConstraint::missing_digit(a0));
        }
        if let Some(spec) = &self.digit_sum {
            let (m, a) = spec
                .split_once(',')
                .ok_or_else(|| anyhow!("--digit-sum expects \"m,a\", got {spec:?}"))?;
            let m: u32 = m.trim().parse().context("bad modulus in --digit-sum")?;
            let a: u32 = a.trim().parse().context("bad residue in --digit-sum")?;
            let mut c = DigitConstraint::digit_sum_residue(m, a);
            if let Some(j) = self.character {
                c = c.with_character(j);
            }
            return Ok(c);
        }
        let spec = self.prescribed.as_ref().unwrap();
        let mut digits = Vec::new();
        if !spec.trim().is_empty() {
            for part in spec.split(',') {
                let (pos, val) = part
                    .split_once('=')
                    .ok_or_else(|| anyhow!("--prescribed expects pos=digit, got {part:?}"))?;
                digits.push((
                    pos.trim().parse::<u32>().context("bad position")?,
                    val.trim().parse::<u32>().context("bad digit")?,
                ));
            }
        }
        Ok(DigitConstraint::prescribed(digits))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count primes (or sum Lambda) below b^k under a digit constraint.
    Count {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
        /// Sum Lambda(n) over the constrained set instead of counting primes.
        #[arg(long)]
        weighted: bool,
    },

    /// Evaluate a digit transform (or its derivative) at an exact rational.
    Fourier {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
        /// Frequency as an exact rational "p/q".
        #[arg(long)]
        theta: Frequency,
        /// Evaluate the derivative instead.
        #[arg(long)]
        derivative: bool,
        /// Also run the O(b^k) defining sum and report the difference.
        #[arg(long)]
        check_oracle: bool,
    },

    /// Full transform spectrum on the grid a/b^k.
    Spectrum {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
        /// Transform the von Mangoldt sequence instead of a digit constraint.
        #[arg(long)]
        lambda: bool,
    },

    /// Classify every a/b^k into major/minor arcs by Dirichlet quality.
    Arcs {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        /// Major iff max(d, b^k|beta|) < threshold.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        d0: Option<u64>,
        /// Log-power A for the default threshold (log b^k)^A.
        #[arg(long, default_value_t = 8.0)]
        a_power: f64,
    },

    /// Main-term prediction vs the counting oracle, with an error budget.
    Estimate {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 8.0)]
        a_power: f64,
        #[arg(long)]
        d0: Option<u64>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Effective constant for the error budget (default: fitted from an
        /// L1 sweep at this base).
        #[arg(long)]
        c_fit: Option<f64>,
        /// Skip the arc classification in the report.
        #[arg(long)]
        no_classify: bool,
    },

    /// Numerical verification of a bound lemma.
    #[command(subcommand)]
    Verify(Box<VerifyCommand>),

    /// Run the whole battery at desk scale and emit one combined report.
    ReportAll {
        #[arg(long, default_value_t = 10)]
        b: u32,
        #[arg(long, default_value_t = 4)]
        k: u32,
        #[arg(long, default_value_t = 7)]
        a0: u32,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// L1 sweep: sup_theta sum_a |f_hat(theta + a/b^k)| vs (C b log b)^k.
    L1 {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
        /// Number of theta samples (theta = 0 is always included).
        #[arg(long, default_value_t = 12)]
        samples: usize,
        /// Fail (exit 2) if the fitted per-k constant exceeds this.
        #[arg(long)]
        assert_max_constant: Option<f64>,
    },

    /// Large-sieve sweep over fractions l/d with d ~ D.
    LargeSieve {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
        #[arg(long)]
        d: u64,
        /// Center frequency (exact rational).
        #[arg(long, default_value = "0/1")]
        theta: Frequency,
        #[arg(long)]
        c_fit: Option<f64>,
        #[arg(long)]
        assert_max_constant: Option<f64>,
    },

    /// Hybrid sweep over d ~ D and integral |eta| < B.
    Hybrid {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        c_fit: Option<f64>,
        #[arg(long)]
        assert_max_constant: Option<f64>,
    },

    /// Minor-arc aggregates |f_hat * Lambda_hat| over d ~ D per eta regime.
    MinorArcs {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        d0: Option<u64>,
        #[arg(long)]
        c_fit: Option<f64>,
    },

    /// Pointwise saving of |f_hat(l/d + eps)| below the trivial bound.
    Linf1 {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 7)]
        a0: u32,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        ell: u64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },

    /// Pointwise character-transform bound on an exhaustive theta grid.
    Linf2 {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        /// Character frequency alpha = j/m, an exact rational.
        #[arg(long)]
        alpha: Frequency,
        #[arg(long, default_value_t = 10_000)]
        grid: u64,
    },

    /// Scalar single-digit inequalities and the chaining inequality.
    SingleDigit {
        #[arg(long)]
        b: u32,
        #[arg(long, default_value_t = 100_000)]
        grid: u64,
    },

    /// Equidistribution-sum constant fit over a sampled grid.
    Equidistribution {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 100_000)]
        n_max: u64,
        #[arg(long)]
        assert_max_constant: Option<f64>,
    },

    /// Prime exponential-sum constant fit over a sampled grid.
    PrimeSum {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 100_000)]
        x_max: u64,
        #[arg(long)]
        assert_max_constant: Option<f64>,
    },

    /// Exact inversion-identity check (lhs vs spectrum dot product).
    Inversion {
        #[arg(long)]
        b: u32,
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        constraint: ConstraintArgs,
    },
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("DIGITPRIMES_CACHE").map(PathBuf::from)
}

fn table_for(b: Base, k: u32) -> anyhow::Result<PrimeTable> {
    let n = b.pow(k)?;
    Ok(sieve_primes_cached(n + 1, cache_dir().as_deref())?)
}

fn amplitude_json(z: &Amplitude) -> Value {
    json!({ "re": z.re, "im": z.im, "modulus": z.norm() })
}

/// Deterministic theta samples for L1-style sweeps: 0 plus seeded dyadics.
fn theta_samples(seed: u64, n: usize) -> Vec<Frequency> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut v = vec![Frequency::new(0, 1).unwrap()];
    while v.len() < n.max(10) {
        v.push(Frequency::from_f64(rng.random::<f64>()));
    }
    v
}

fn fitted_c(b: Base, seed: u64, constraint: &DigitConstraint) -> anyhow::Result<f64> {
    // Fit at the largest k with b^k <= 10^4: cheap and stable.
    let mut k = 1;
    while b.pow(k + 1).map(|n| n <= 10_000).unwrap_or(false) {
        k += 1;
    }
    Ok(verify_l1(constraint, b, k, &theta_samples(seed, 12))?.c_k)
}

struct Outcome {
    result: Value,
    passed: bool,
    /// Preformatted CSV payload for subcommands that export one.
    csv: Option<String>,
    /// A plain value echoed to stdout (the report then only goes to --output).
    stdout_line: Option<String>,
}

impl Outcome {
    fn new(result: Value) -> Outcome {
        Outcome {
            result,
            passed: true,
            csv: None,
            stdout_line: None,
        }
    }

    fn with_pass(mut self, passed: bool) -> Outcome {
        self.passed = passed;
        self
    }

    fn with_csv(mut self, csv: String) -> Outcome {
        self.csv = Some(csv);
        self
    }

    fn with_stdout_line(mut self, line: String) -> Outcome {
        self.stdout_line = Some(line);
        self
    }
}

fn bound_fit_csv(fit: &BoundFit) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    fit.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn run_command(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Count {
            b: base,
            k,
            constraint,
            weighted,
        } => {
            let b = Base::new(*base)?;
            let c = constraint.build()?;
            c.validate(b, *k)?;
            let table = table_for(b, *k)?;
            let value = count_constrained_primes(&c, b, *k, *weighted, &table)?;
            let line = if *weighted {
                format!("{value}")
            } else {
                format!("{}", value as u64)
            };
            Ok(Outcome::new(json!({
                "constraint": c,
                "b": base,
                "k": k,
                "weighted": weighted,
                "count": value,
            }))
            .with_stdout_line(line))
        }

        Command::Fourier {
            b: base,
            k,
            constraint,
            theta,
            derivative,
            check_oracle,
        } => {
            let b = Base::new(*base)?;
            let c = constraint.build()?;
            let value = if *derivative {
                fourier_derivative_eval(&c, theta, b, *k)?
            } else {
                fourier_eval(&c, theta, b, *k)?
            };
            let mut result = json!({
                "constraint": c,
                "b": base,
                "k": k,
                "theta": theta.to_string(),
                "derivative": derivative,
                "value": amplitude_json(&value),
            });
            if *check_oracle && !*derivative {
                let oracle = naive_fourier_oracle(&c, theta, b, *k)?;
                result["oracle"] = amplitude_json(&oracle);
                result["abs_difference"] = json!((value - oracle).norm());
            }
            Ok(Outcome::new(result))
        }

        Command::Spectrum {
            b: base,
            k,
            constraint,
            lambda,
        } => {
            let b = Base::new(*base)?;
            let spectrum = if *lambda {
                let table = table_for(b, *k)?;
                lambda_hat_spectrum(b, *k, &table)?
            } else {
                full_spectrum(&constraint.build()?, b, *k)?
            };
            // Build only the requested representation: a 10^6-row value
            // tree for a CSV export is pure allocation churn.
            if cli.format == Format::Csv {
                let mut csv = Vec::new();
                digitprimes::transforms::write_spectrum_csv(&mut csv, &spectrum)?;
                return Ok(Outcome::new(Value::Null).with_csv(String::from_utf8(csv)?));
            }
            let rows: Vec<Value> = spectrum
                .iter()
                .enumerate()
                .map(|(a, z)| json!({"a": a, "re": z.re, "im": z.im, "modulus": z.norm()}))
                .collect();
            Ok(Outcome::new(json!({
                "b": base,
                "k": k,
                "kind": if *lambda { "lambda" } else { "constraint" },
                "length": spectrum.len(),
                "values": rows,
            })))
        }

        Command::Arcs {
            b: base,
            k,
            threshold,
            d0,
            a_power,
        } => {
            let b = Base::new(*base)?;
            let n = b.pow(*k)?;
            let d0 = d0.unwrap_or_else(|| default_d0(b, *k));
            let threshold =
                threshold.unwrap_or_else(|| ((*k as f64) * (*base as f64).ln()).powf(*a_power));
            let dec = classify_arcs(b, *k, threshold, d0)?;
            let outcome = Outcome::new(json!({
                "b": base,
                "k": k,
                "d0": d0,
                "threshold": threshold,
                "major_count": dec.major_count(),
                "minor_count": dec.minor_count(),
            }));
            if cli.format != Format::Csv {
                return Ok(outcome);
            }
            // Arc-level dumps stay manageable: capped at 10^6 rows.
            if n > 1_000_000 {
                return Err(anyhow!("arc-level CSV dumps are capped at b^k <= 10^6"));
            }
            let mut csv = String::from("a,label,ell,d,beta\n");
            for a in 0..n {
                let (label, approx) = dec.arc(a)?;
                csv.push_str(&format!(
                    "{a},{},{},{},{}\n",
                    if label == ArcLabel::Major {
                        "major"
                    } else {
                        "minor"
                    },
                    approx.ell,
                    approx.d,
                    approx.beta
                ));
            }
            Ok(outcome.with_csv(csv))
        }

        Command::Estimate {
            b: base,
            k,
            constraint,
            weighted,
            a_power,
            d0,
            threshold,
            c_fit,
            no_classify,
        } => {
            let b = Base::new(*base)?;
            let c = constraint.build()?;
            c.validate(b, *k)?;
            let fit_constraint = match &c {
                DigitConstraint::MissingDigit { .. } => c.clone(),
                _ => DigitConstraint::missing_digit(base - 1),
            };
            let c_fit = match c_fit {
                Some(v) => *v,
                None => fitted_c(b, cli.seed, &fit_constraint)?,
            };
            let exps = ExponentSet::from_fitted(b, c_fit);
            let mut config = EstimateConfig::new(exps);
            config.weighted = *weighted;
            config.log_power = *a_power;
            config.d0 = *d0;
            config.threshold = *threshold;
            config.classify = !*no_classify;
            let table = table_for(b, *k)?;
            let report = estimate_count(&c, b, *k, &config, &table)?;
            Ok(Outcome::new(serde_json::to_value(&report)?))
        }

        Command::Verify(v) => run_verify(cli, v),

        Command::ReportAll { b: base, k, a0 } => {
            let b = Base::new(*base)?;
            let table = table_for(b, *k)?;
            let c = DigitConstraint::missing_digit(*a0);
            let c_fit = fitted_c(b, cli.seed, &c)?;
            let exps = ExponentSet::from_fitted(b, c_fit);

            let count = count_constrained_primes(&c, b, *k, false, &table)?;
            let mut config = EstimateConfig::new(exps);
            config.weighted = true;
            let estimate = estimate_count(&c, b, *k, &config, &table)?;
            let inversion = inversion_identity_check(&c, b, *k, &table)?;
            let inversion_ok = inversion.rel_err <= 1e-6;
            let decomposition = digit_sum_character_decomposition(b, *k, 2, 0, &table)?;
            let decomposition_ok = (decomposition.total - decomposition.oracle).abs()
                / decomposition.oracle.max(1.0)
                <= 1e-6;
            let single = single_digit_inequalities(b, 10_000)?;
            let linf2 = verify_linf_character(b, (*k).min(6), 1, 2, 2_003)?;
            let l1 = verify_l1(&c, b, (*k).min(3), &theta_samples(cli.seed, 12))?;
            let kappa_value = kappa(b, *a0)?;

            let passed = inversion_ok && decomposition_ok && single.pass && linf2.pass;
            Ok(Outcome::new(json!({
                "b": base,
                "k": k,
                "a0": a0,
                "kappa": { "num": kappa_value.num as u64, "den": kappa_value.den as u64 },
                "count_unweighted": count,
                "estimate": serde_json::to_value(&estimate)?,
                "inversion": serde_json::to_value(inversion)?,
                "character_decomposition_m2": serde_json::to_value(&decomposition)?,
                "single_digit": serde_json::to_value(&single)?,
                "linf_character": serde_json::to_value(&linf2)?,
                "l1": serde_json::to_value(&l1)?,
                "all_checks_passed": passed,
            }))
            .with_pass(passed))
        }
    }
}

fn run_verify(cli: &Cli, v: &VerifyCommand) -> anyhow::Result<Outcome> {
    match v {
        VerifyCommand::L1 {
            b: base,
            k,
            constraint,
            samples,
            assert_max_constant,
        } => {
            let fit = verify_l1(
                &constraint.build()?,
                Base::new(*base)?,
                *k,
                &theta_samples(cli.seed, *samples),
            )?;
            let passed = assert_max_constant.is_none_or(|cap| fit.c_k <= cap);
            let csv = bound_fit_csv(&fit.fit)?;
            Ok(Outcome::new(serde_json::to_value(&fit)?)
                .with_pass(passed)
                .with_csv(csv))
        }

        VerifyCommand::LargeSieve {
            b: base,
            k,
            constraint,
            d,
            theta,
            c_fit,
            assert_max_constant,
        } => {
            let b = Base::new(*base)?;
            let c = constraint.build()?;
            let c_fit = match c_fit {
                Some(v) => *v,
                None => fitted_c(b, cli.seed, &c)?,
            };
            let fit = verify_large_sieve(&c, b, *k, *d, theta, c_fit)?;
            let passed = assert_max_constant.is_none_or(|cap| fit.fitted_constant <= cap);
            let csv = bound_fit_csv(&fit)?;
            Ok(
                Outcome::new(json!({ "c_fit": c_fit, "fit": serde_json::to_value(&fit)? }))
                    .with_pass(passed)
                    .with_csv(csv),
            )
        }

        VerifyCommand::Hybrid {
            b: base,
            k,
            constraint,
            d,
            eta,
            c_fit,
            assert_max_constant,
        } => {
            let b = Base::new(*base)?;
            let c = constraint.build()?;
            let c_fit = match c_fit {
                Some(v) => *v,
                None => fitted_c(b, cli.seed, &c)?,
            };
            let exps = ExponentSet::from_fitted(b, c_fit);
            let report = verify_hybrid(&c, b, *k, *d, *eta, &exps)?;
            let passed = assert_max_constant.is_none_or(|cap| report.fit.fitted_constant <= cap);
            let csv = bound_fit_csv(&report.fit)?;
            Ok(Outcome::new(serde_json::to_value(&report)?)
                .with_pass(passed)
                .with_csv(csv))
        }

        VerifyCommand::MinorArcs {
            b: base,
            k,
            constraint,
            d,
            eta,
            d0,
            c_fit,
        } => {
            let b = Base::new(*base)?;
            let c = constraint.build()?;
            let c_fit = match c_fit {
                Some(v) => *v,
                None => fitted_c(b, cli.seed, &DigitConstraint::missing_digit(base - 1))?,
            };
            let exps = ExponentSet::from_fitted(b, c_fit);
            let d0 = d0.unwrap_or_else(|| default_d0(b, *k));
            let table = table_for(b, *k)?;
            let report = minor_arc_report(&c, b, *k, *d, *eta, d0, &exps, &table)?;
            Ok(Outcome::new(serde_json::to_value(&report)?))
        }

        VerifyCommand::Linf1 {
            b: base,
            k,
            a0,
            d,
            ell,
            eps,
        } => {
            let report = verify_linf_rational(Base::new(*base)?, *k, *a0, *d, *ell, *eps)?;
            let passed = report.pass;
            Ok(Outcome::new(serde_json::to_value(&report)?).with_pass(passed))
        }

        VerifyCommand::Linf2 {
            b: base,
            k,
            alpha,
            grid,
        } => {
            if alpha.offset() != 0.0 {
                return Err(anyhow!("--alpha must be an exact rational j/m"));
            }
            let (j, m) = (alpha.num() as u32, alpha.den() as u32);
            let report = verify_linf_character(Base::new(*base)?, *k, j, m, *grid)?;
            let passed = report.pass;
            Ok(Outcome::new(serde_json::to_value(&report)?).with_pass(passed))
        }

        VerifyCommand::SingleDigit { b: base, grid } => {
            let report = single_digit_inequalities(Base::new(*base)?, *grid)?;
            let passed = report.pass;
            Ok(Outcome::new(serde_json::to_value(&report)?).with_pass(passed))
        }

        VerifyCommand::Equidistribution {
            points,
            n_max,
            assert_max_constant,
        } => {
            let grid = equidist_grid(cli.seed, *points, *n_max);
            let fit = fit_equidistribution_constants(&grid)?;
            let passed = fit.rows.iter().all(|r| r.ratio.is_finite())
                && assert_max_constant.is_none_or(|cap| fit.fitted_constant <= cap);
            let csv = bound_fit_csv(&fit)?;
            Ok(Outcome::new(serde_json::to_value(&fit)?)
                .with_pass(passed)
                .with_csv(csv))
        }

        VerifyCommand::PrimeSum {
            points,
            x_max,
            assert_max_constant,
        } => {
            let table = sieve_primes_cached(*x_max + 1, cache_dir().as_deref())?;
            let grid = prime_sum_grid(cli.seed, *points, *x_max);
            let fit = fit_prime_sum_constants(&grid, &table)?;
            let passed = fit.rows.iter().all(|r| r.ratio.is_finite())
                && assert_max_constant.is_none_or(|cap| fit.fitted_constant <= cap);
            let csv = bound_fit_csv(&fit)?;
            Ok(Outcome::new(serde_json::to_value(&fit)?)
                .with_pass(passed)
                .with_csv(csv))
        }

        VerifyCommand::Inversion {
            b: base,
            k,
            constraint,
        } => {
            let b = Base::new(*base)?;
            let table = table_for(b, *k)?;
            let report = inversion_identity_check(&constraint.build()?, b, *k, &table)?;
            let passed = report.rel_err <= 1e-6;
            Ok(Outcome::new(serde_json::to_value(report)?).with_pass(passed))
        }
    }
}

fn sample_reduced_fraction(rng: &mut StdRng) -> (u64, i64, f64) {
    let d = rng.random_range(1..=100u64);
    let mut ell = rng.random_range(0..d.max(2));
    while digitprimes::arith::gcd_u64(ell % d, d) != 1 {
        ell = (ell + 1) % d.max(2);
    }
    let mag = (rng.random::<f64>() * 0.98 + 0.01) / (d as f64 * d as f64);
    let beta = if rng.random::<bool>() { mag } else { -mag };
    (d, ell as i64, beta)
}

fn equidist_grid(seed: u64, points: usize, n_max: u64) -> Vec<EquidistPoint> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..points)
        .map(|_| {
            let (d, ell, beta) = sample_reduced_fraction(&mut rng);
            EquidistPoint {
                n: rng.random_range(1000..=n_max.max(1001)),
                m: rng.random_range(1.0..=1000.0),
                ell,
                d,
                beta,
            }
        })
        .collect()
}

fn prime_sum_grid(seed: u64, points: usize, x_max: u64) -> Vec<PrimeSumPoint> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..points)
        .map(|_| {
            let (d, ell, beta) = sample_reduced_fraction(&mut rng);
            PrimeSumPoint {
                x: rng.random_range(10_000..=x_max.max(10_001)),
                ell,
                d,
                beta,
            }
        })
        .collect()
}

fn resolved_config(cli: &Cli) -> Value {
    json!({
        "command": format!("{:?}", cli.command),
        "seed": cli.seed,
        "workers": cli.workers,
        "format": format!("{:?}", cli.format).to_lowercase(),
        "cache_dir": cache_dir().map(|p| p.display().to_string()),
    })
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.output {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            f.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                f.write_all(b"\n")?;
            }
        }
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}

fn real_main() -> anyhow::Result<i32> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(0);
        }
        Err(e) => {
            eprint!("{e}");
            return Ok(1);
        }
    };

    if let Some(workers) = cli.workers {
        if workers > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build_global()
                .context("rayon pool")?;
        }
    }

    let started = Instant::now();
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    if cli.dry_run {
        let report = json!({
            "schema_version": SCHEMA_VERSION,
            "dry_run": true,
            "plan": resolved_config(&cli),
            "meta": { "timestamp": timestamp },
        });
        emit(&cli, &serde_json::to_string_pretty(&report)?)?;
        return Ok(0);
    }

    let outcome = run_command(&cli)?;

    if cli.format == Format::Csv {
        match &outcome.csv {
            Some(csv) => emit(&cli, csv)?,
            None => return Err(anyhow!("this subcommand has no CSV representation")),
        }
    } else if let Some(line) = &outcome.stdout_line {
        // Plain-value subcommands print the value itself; the JSON report is
        // written only when --output asks for it.
        if cli.output.is_some() {
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "config": resolved_config(&cli),
                "result": outcome.result,
                "passed": outcome.passed,
                "meta": {
                    "timestamp": timestamp,
                    "elapsed_ms": started.elapsed().as_millis() as u64,
                },
            });
            emit(&cli, &serde_json::to_string_pretty(&report)?)?;
        }
        println!("{line}");
    } else {
        let report = json!({
            "schema_version": SCHEMA_VERSION,
            "config": resolved_config(&cli),
            "result": outcome.result,
            "passed": outcome.passed,
            "meta": {
                "timestamp": timestamp,
                "elapsed_ms": started.elapsed().as_millis() as u64,
            },
        });
        emit(&cli, &serde_json::to_string_pretty(&report)?)?;
    }

    Ok(if outcome.passed { 0 } else { 2 })
}

fn main() {
    match real_main() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

//! Segmented sieve of Eratosthenes and the derived prime table: prime list,
//! von Mangoldt values over prime powers, and Chebyshev psi prefix sums.
//!
//! Segments are sized to stay inside L2 cache and are sieved independently,
//! so they parallelize over workers with a deterministic concatenation. The
//! von Mangoldt function is stored per prime power (not per integer), which
//! keeps memory proportional to the number of primes.

use crate::error::{Error, Result};
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;

/// Hard upper bound on sieve limits.
pub const MAX_SIEVE_LIMIT: u64 = 1 << 34;

/// Odd-only bitset segment of 2^18 bytes, covering ~4.2M integers: fits L2.
const SEGMENT_BYTES: usize = 1 << 18;

/// Magic bytes of the on-disk prime table format.
pub const CACHE_MAGIC: &[u8; 5] = b"DGPR1";

/// Primes below a limit together with the von Mangoldt function on prime
/// powers and psi prefix sums.
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    /// (n, log p) for every prime power n = p^j < limit, sorted by n.
    mangoldt: Vec<(u64, f64)>,
    /// psi_prefix[i] = sum of mangoldt values up to and including entry i.
    psi_prefix: Vec<f64>,
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return if limit > 2 { vec![2] } else { vec![] };
    }
    let n = limit as usize;
    let mut composite = vec![false; n];
    let mut primes = Vec::new();
    for p in 2..n {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m < n {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

/// Sieve the odd numbers in [lo, hi) against the base primes.
fn sieve_segment(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    debug_assert!(lo % 2 == 1);
    let len = (hi - lo).div_ceil(2) as usize; // odd numbers lo, lo+2, ...
    let mut composite = vec![false; len];
    for &p in base {
        if p == 2 {
            continue;
        }
        if p * p >= hi {
            break;
        }
        let mut start = p * p;
        if start < lo {
            let k = lo.div_ceil(p);
            start = k * p;
            if start % 2 == 0 {
                start += p;
            }
        }
        let mut m = start;
        while m < hi {
            composite[((m - lo) / 2) as usize] = true;
            m += 2 * p;
        }
    }
    let mut out = Vec::new();
    for (i, &c) in composite.iter().enumerate() {
        if !c {
            let n = lo + 2 * i as u64;
            if n >= 3 && n < hi {
                out.push(n);
            }
        }
    }
    out
}

fn primes_below(limit: u64) -> Vec<u64> {
    let root = (limit as f64).sqrt() as u64 + 2;
    let base = simple_sieve(root.min(limit));
    if limit <= root {
        return base.into_iter().filter(|&p| p < limit).collect();
    }

    let span = (SEGMENT_BYTES * 16) as u64; // integers per segment
    let mut ranges = Vec::new();
    let mut lo = 3u64;
    while lo < limit {
        let hi = (lo + span).min(limit);
        ranges.push((lo, hi));
        lo = hi;
    }
    let segments: Vec<Vec<u64>> = ranges
        .par_iter()
        .map(|&(lo, hi)| {
            let lo_odd = if lo % 2 == 0 { lo + 1 } else { lo };
            sieve_segment(lo_odd, hi, &base)
        })
        .collect();

    let mut primes = Vec::with_capacity(segments.iter().map(Vec::len).sum::<usize>() + 1);
    if limit > 2 {
        primes.push(2);
    }
    for seg in segments {
        primes.extend(seg);
    }
    primes
}

/// Build the complete prime table below `limit` (exclusive).
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if !(2..=MAX_SIEVE_LIMIT).contains(&limit) {
        return Err(Error::Resource {
            what: "sieve limit",
            requested: limit as u128,
            bound: MAX_SIEVE_LIMIT as u128,
        });
    }
    let primes = primes_below(limit);
    Ok(PrimeTable::from_primes(limit, primes))
}

impl PrimeTable {
    fn from_primes(limit: u64, primes: Vec<u64>) -> PrimeTable {
        // Lambda(p^j) = log p; powers j >= 2 only occur for p <= sqrt(limit).
        let mut mangoldt: Vec<(u64, f64)> = Vec::with_capacity(primes.len() + 64);
        for &p in &primes {
            mangoldt.push((p, (p as f64).ln()));
        }
        for &p in &primes {
            if p.saturating_mul(p) >= limit {
                break;
            }
            let lp = (p as f64).ln();
            let mut n = p * p;
            while n < limit {
                mangoldt.push((n, lp));
                match n.checked_mul(p) {
                    Some(m) => n = m,
                    None => break,
                }
            }
        }
        mangoldt.sort_unstable_by_key(|&(n, _)| n);

        let mut psi_prefix = Vec::with_capacity(mangoldt.len());
        let mut acc = 0.0;
        for &(_, v) in &mangoldt {
            acc += v;
            psi_prefix.push(acc);
        }
        PrimeTable {
            limit,
            primes,
            mangoldt,
            psi_prefix,
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Number of primes strictly below `x`.
    pub fn prime_count(&self, x: u64) -> usize {
        self.primes.partition_point(|&p| p < x)
    }

    pub fn is_prime(&self, n: u64) -> bool {
        assert!(n < self.limit, "query beyond table limit");
        self.primes.binary_search(&n).is_ok()
    }

    /// All prime powers `n < x` with their `log p` weight, ascending in n.
    pub fn mangoldt_below(&self, x: u64) -> &[(u64, f64)] {
        let end = self.mangoldt.partition_point(|&(n, _)| n < x);
        &self.mangoldt[..end]
    }

    /// `Lambda(n)`: `log p` when `n = p^j`, else 0.
    pub fn mangoldt(&self, n: u64) -> f64 {
        assert!(n < self.limit, "query beyond table limit");
        match self.mangoldt.binary_search_by_key(&n, |&(m, _)| m) {
            Ok(i) => self.mangoldt[i].1,
            Err(_) => 0.0,
        }
    }

    /// Chebyshev `psi(x) = sum_{n <= x} Lambda(n)`.
    pub fn psi(&self, x: u64) -> f64 {
        let end = self.mangoldt.partition_point(|&(n, _)| n <= x);
        if end == 0 {
            0.0
        } else {
            self.psi_prefix[end - 1]
        }
    }

    /// Serialize as magic, limit (8-byte LE), then LEB128 prime gaps
    /// (the first gap is taken from 0, so it encodes the prime 2).
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&self.limit.to_le_bytes())?;
        let mut prev = 0u64;
        let mut buf = Vec::with_capacity(self.primes.len() * 2);
        for &p in &self.primes {
            let mut gap = p - prev;
            prev = p;
            loop {
                let byte = (gap & 0x7f) as u8;
                gap >>= 7;
                if gap == 0 {
                    buf.push(byte);
                    break;
                }
                buf.push(byte | 0x80);
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<PrimeTable> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::BadCache("bad magic bytes".into()));
        }
        let mut lim = [0u8; 8];
        r.read_exact(&mut lim)?;
        let limit = u64::from_le_bytes(lim);
        if !(2..=MAX_SIEVE_LIMIT).contains(&limit) {
            return Err(Error::BadCache(format!("limit {limit} out of range")));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut primes = Vec::new();
        let mut prev = 0u64;
        let mut gap = 0u64;
        let mut shift = 0u32;
        for &b in &bytes {
            gap |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 != 0 {
                shift += 7;
                if shift > 63 {
                    return Err(Error::BadCache("gap varint overflow".into()));
                }
                continue;
            }
            prev += gap;
            if prev >= limit {
                return Err(Error::BadCache(format!(
                    "prime {prev} beyond limit {limit}"
                )));
            }
            primes.push(prev);
            gap = 0;
            shift = 0;
        }
        if shift != 0 {
            return Err(Error::BadCache("truncated gap varint".into()));
        }
        Ok(PrimeTable::from_primes(limit, primes))
    }

    pub fn save_to_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(f))
    }

    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<PrimeTable> {
        let f = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(f))
    }
}

/// Sieve with a disk cache keyed by `limit` in `dir`, creating the file on a
/// miss. Used by the CLI via the `DIGITPRIMES_CACHE` environment variable.
pub fn sieve_primes_cached(limit: u64, dir: Option<&Path>) -> Result<PrimeTable> {
    let Some(dir) = dir else {
        return sieve_primes(limit);
    };
    let path = dir.join(format!("dgpr_{limit}.bin"));
    if path.exists() {
        match PrimeTable::load_from_path(&path) {
            Ok(t) if t.limit() == limit => return Ok(t),
            // A stale or damaged file falls through to a fresh sieve.
            _ => {}
        }
    }
    let table = sieve_primes(limit)?;
    std::fs::create_dir_all(dir)?;
    table.save_to_path(&path)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_prime_trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn tiny_table() {
        let t = sieve_primes(10).unwrap();
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
        assert!((t.mangoldt(8) - 2f64.ln()).abs() < 1e-15);
        assert!((t.mangoldt(9) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(t.mangoldt(6), 0.0);
    }

    #[test]
    fn pi_100_is_25() {
        let t = sieve_primes(100).unwrap();
        assert_eq!(t.primes().len(), 25);
        for &p in t.primes() {
            assert!(is_prime_trial(p), "{p} is not prime");
        }
    }

    #[test]
    fn agrees_with_trial_division() {
        let t = sieve_primes(20_000).unwrap();
        // Random-ish sample of residues either side of segment boundaries.
        for n in (0..20_000u64).step_by(137) {
            assert_eq!(t.is_prime(n), is_prime_trial(n), "mismatch at {n}");
        }
        assert_eq!(
            t.primes().len(),
            (0..20_000).filter(|&n| is_prime_trial(n)).count()
        );
    }

    #[test]
    fn mangoldt_exactly_on_prime_powers() {
        let t = sieve_primes(1000).unwrap();
        for n in 1..1000u64 {
            let v = t.mangoldt(n);
            let mut expected = 0.0;
            for p in 2..=n {
                if !is_prime_trial(p) {
                    continue;
                }
                let mut m = p;
                while m < n {
                    m = match m.checked_mul(p) {
                        Some(x) => x,
                        None => break,
                    };
                }
                if m == n {
                    expected = (p as f64).ln();
                    break;
                }
            }
            assert!((v - expected).abs() < 1e-12, "Lambda({n})");
        }
    }

    #[test]
    fn psi_is_nondecreasing_and_close_to_x() {
        let t = sieve_primes(2_000_000).unwrap();
        let mut prev = 0.0;
        for x in (10..2_000_000u64).step_by(9999) {
            let v = t.psi(x);
            assert!(v >= prev);
            prev = v;
        }
        let x = 1_000_000u64;
        let rel = (t.psi(x) - x as f64).abs() / x as f64;
        assert!(rel < 0.01, "psi deviation {rel}");
    }

    #[test]
    fn psi_small_value() {
        let t = sieve_primes(20).unwrap();
        // psi(10) = 3 log 2 + 2 log 3 + log 5 + log 7
        let expected = 3.0 * 2f64.ln() + 2.0 * 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((t.psi(10) - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(sieve_primes(1).is_err());
        assert!(sieve_primes(MAX_SIEVE_LIMIT + 1).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let t = sieve_primes(100_000).unwrap();
        let mut buf = Vec::new();
        t.save(&mut buf).unwrap();
        assert_eq!(&buf[..5], CACHE_MAGIC);
        assert_eq!(u64::from_le_bytes(buf[5..13].try_into().unwrap()), 100_000);
        let u = PrimeTable::load(&buf[..]).unwrap();
        assert_eq!(t.primes(), u.primes());
        assert_eq!(t.limit(), u.limit());
        assert_eq!(t.psi(99_999), u.psi(99_999));
    }

    #[test]
    fn load_rejects_garbage() {
        assert!(PrimeTable::load(&b"NOPE!"[..]).is_err());
        let mut buf = Vec::new();
        sieve_primes(50).unwrap().save(&mut buf).unwrap();
        buf[3] ^= 0xff;
        assert!(PrimeTable::load(&buf[..]).is_err());
    }
}

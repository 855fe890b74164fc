//! Exact q-expansions of eta-quotient newforms and their normalised Hecke
//! eigenvalues.
//!
//! Coefficients are computed modulo several NTT primes and lifted by CRT,
//! with one extra prime held back to confirm each lift. They are stored as
//! `i128`, which holds every coefficient of the weight 12 form up to the
//! maximum supported depth.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, primes_up_to};
use crate::ntt::{Crt, Ntt, MAX_LOG_SIZE, PRIMES, RECONSTRUCTION_PRIMES};
use crate::sieves::SpfSieve;
use crate::{Error, Result};

/// Default coefficient depth used by the command line and the acceptance
/// suite.
pub const DEFAULT_DEPTH: usize = 1_000_000;

/// Largest depth the NTT primes can handle.
pub const MAX_DEPTH: usize = 1 << (MAX_LOG_SIZE - 1);

/// A product of eta functions `prod eta(m tau)^r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtaQuotient {
    pub factors: Vec<(u32, i32)>,
    pub level: u64,
    pub weight: u32,
}

impl EtaQuotient {
    pub fn new(factors: Vec<(u32, i32)>, level: u64) -> Result<Self> {
        let total: i32 = factors.iter().map(|&(_, r)| r).sum();
        if total <= 0 || total % 2 != 0 {
            return Err(Error::Domain(format!(
                "eta quotient exponents sum to {total}; weight must be a positive integer"
            )));
        }
        if factors.iter().any(|&(m, _)| m == 0) {
            return Err(Error::Domain("eta quotient scale must be positive".into()));
        }
        let q = EtaQuotient {
            factors,
            level,
            weight: (total / 2) as u32,
        };
        let offset = q.offset_numerator();
        if offset % 24 != 0 {
            return Err(Error::Domain(format!(
                "eta quotient has fractional q-offset {offset}/24"
            )));
        }
        Ok(q)
    }

    /// `sum m r`; the expansion starts at `q^{offset/24}`.
    pub fn offset_numerator(&self) -> i64 {
        self.factors.iter().map(|&(m, r)| m as i64 * r as i64).sum()
    }
}

/// Coefficients of `prod_{n >= 1} (1 - q^n)` through `q^precision`, from the
/// pentagonal number theorem.
pub fn eta_series(precision: usize) -> Vec<i64> {
    let mut out = vec![0i64; precision + 1];
    out[0] = 1;
    let mut k: i64 = 1;
    loop {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let g1 = (k * (3 * k - 1) / 2) as usize;
        let g2 = (k * (3 * k + 1) / 2) as usize;
        if g1 > precision {
            break;
        }
        out[g1] = sign;
        if g2 <= precision {
            out[g2] = sign;
        }
        k += 1;
    }
    out
}

fn series_pow(ntt: &Ntt, base: &[u32], mut exp: u32, len: usize) -> Vec<u32> {
    let m = ntt.modulus();
    let mut result: Option<Vec<u32>> = None;
    let mut b = base.to_vec();
    loop {
        if exp & 1 == 1 {
            result = Some(match result {
                None => b.clone(),
                Some(r) => ntt.mul_truncated(&r, &b, len),
            });
        }
        exp >>= 1;
        if exp == 0 {
            break;
        }
        b = ntt.mul_truncated(&b, &b, len);
    }
    result.unwrap_or_else(|| {
        let mut one = vec![0u32; len];
        one[0] = m.to_mont(1);
        one
    })
}

/// Exact coefficients `a(n)` for `1 <= n <= precision`; index 0 holds 0.
pub fn expand_eta_quotient(spec: &EtaQuotient, precision: usize) -> Result<Vec<i128>> {
    if spec.offset_numerator() != 24 {
        return Err(Error::NotCuspForm {
            offset: spec.offset_numerator(),
        });
    }
    if precision == 0 {
        return Err(Error::Domain("precision must be at least 1".into()));
    }
    if precision > MAX_DEPTH {
        return Err(Error::Range {
            index: precision as u64,
            limit: MAX_DEPTH as u64,
        });
    }
    if let Some(&(_, r)) = spec.factors.iter().find(|&&(_, r)| r < 0) {
        return Err(Error::Unsupported(format!(
            "negative eta exponent {r} (only holomorphic products are expanded)"
        )));
    }
    // a(n) is the coefficient of q^{n-1} in the eta product
    let len = precision;
    let eta = eta_series(len);
    let log = (2 * len - 1).next_power_of_two().trailing_zeros().max(1);
    let mut residues: Vec<Vec<u32>> = Vec::with_capacity(PRIMES.len());
    for &p in &PRIMES {
        let ntt = Ntt::new(p, log);
        let m = ntt.modulus();
        let mut acc: Option<Vec<u32>> = None;
        for &(scale, r) in &spec.factors {
            if r == 0 {
                continue;
            }
            let mut base = vec![0u32; len];
            for (i, &c) in eta.iter().enumerate() {
                let idx = i * scale as usize;
                if idx >= len {
                    break;
                }
                if c != 0 {
                    base[idx] = m.from_i64(c);
                }
            }
            let pw = series_pow(&ntt, &base, r as u32, len);
            acc = Some(match acc {
                None => pw,
                Some(a) => ntt.mul_truncated(&a, &pw, len),
            });
        }
        let acc = acc.expect("weight > 0 implies a non-trivial factor");
        residues.push(acc.into_iter().map(|x| m.from_mont(x)).collect());
    }

    let crt = Crt::new();
    let check_prime = PRIMES[RECONSTRUCTION_PRIMES] as i128;
    let mut out = Vec::with_capacity(precision + 1);
    out.push(0i128);
    let mut buf = [0u32; RECONSTRUCTION_PRIMES];
    for i in 0..len {
        for (j, slot) in buf.iter_mut().enumerate() {
            *slot = residues[j][i];
        }
        let value = crt.lift(&buf);
        if value.rem_euclid(check_prime) != residues[RECONSTRUCTION_PRIMES][i] as i128 {
            return Err(Error::Resolution(format!(
                "CRT lift of a({}) disagrees with the check prime; |a| exceeds 2^127 or {}",
                i + 1,
                crt.bound()
            )));
        }
        out.push(value);
    }
    Ok(out)
}

/// `a(n) / n^{(k-1)/2}` for every index; index 0 holds 0.
pub fn normalize(a: &[i128], weight: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    out.push(0.0);
    for (n, &an) in a.iter().enumerate().skip(1) {
        out.push(an as f64 / weight_factor(n as u64, weight));
    }
    out
}

/// `n^{(k-1)/2}`.
#[inline]
pub fn weight_factor(n: u64, weight: u32) -> f64 {
    let nf = n as f64;
    if weight % 2 == 1 {
        nf.powi(((weight - 1) / 2) as i32)
    } else {
        nf.powi(((weight - 2) / 2) as i32) * nf.sqrt()
    }
}

/// A catalog newform with its cached coefficients.
#[derive(Clone, Debug)]
pub struct EigenformEntry {
    pub label: String,
    pub eta: EtaQuotient,
    a: Vec<i128>,
    lambda: Vec<f64>,
}

impl EigenformEntry {
    pub fn expand(label: &str, eta: EtaQuotient, depth: usize) -> Result<Self> {
        let a = expand_eta_quotient(&eta, depth)?;
        Ok(Self::from_coefficients(label, eta, a))
    }

    fn from_coefficients(label: &str, eta: EtaQuotient, a: Vec<i128>) -> Self {
        let lambda = normalize(&a, eta.weight);
        EigenformEntry {
            label: label.to_string(),
            eta,
            a,
            lambda,
        }
    }

    pub fn level(&self) -> u64 {
        self.eta.level
    }

    pub fn weight(&self) -> u32 {
        self.eta.weight
    }

    /// Largest n with a cached coefficient.
    pub fn depth(&self) -> usize {
        self.a.len() - 1
    }

    pub fn a(&self, n: u64) -> Result<i128> {
        self.a.get(n as usize).copied().filter(|_| n >= 1).ok_or(Error::Range {
            index: n,
            limit: self.depth() as u64,
        })
    }

    pub fn lambda(&self, n: u64) -> Result<f64> {
        self.lambda.get(n as usize).copied().filter(|_| n >= 1).ok_or(Error::Range {
            index: n,
            limit: self.depth() as u64,
        })
    }

    /// Exact coefficients, index 0 unused.
    pub fn coefficients(&self) -> &[i128] {
        &self.a
    }

    /// Normalised eigenvalues, index 0 unused.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// Cheap copy restricted to `n <= depth`.
    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth > self.depth() {
            return Err(Error::Range {
                index: depth as u64,
                limit: self.depth() as u64,
            });
        }
        Ok(EigenformEntry {
            label: self.label.clone(),
            eta: self.eta.clone(),
            a: self.a[..=depth].to_vec(),
            lambda: self.lambda[..=depth].to_vec(),
        })
    }

    #[cfg(test)]
    pub(crate) fn corrupt(&mut self, n: usize, delta: i128) {
        self.a[n] += delta;
        self.lambda = normalize(&self.a, self.eta.weight);
    }
}

/// The fixed catalog as (label, eta quotient).
pub fn catalog_specs() -> Vec<(&'static str, EtaQuotient)> {
    let mk = |f: Vec<(u32, i32)>, n| EtaQuotient::new(f, n).expect("catalog entry is valid");
    vec![
        ("delta", mk(vec![(1, 24)], 1)),
        ("d2k8", mk(vec![(1, 8), (2, 8)], 2)),
        ("d5k4", mk(vec![(1, 4), (5, 4)], 5)),
        ("d11k2", mk(vec![(1, 2), (11, 2)], 11)),
    ]
}

pub fn catalog_spec(label: &str) -> Result<EtaQuotient> {
    catalog_specs()
        .into_iter()
        .find(|(l, _)| *l == label)
        .map(|(_, e)| e)
        .ok_or_else(|| Error::Domain(format!("unknown catalog form '{label}'")))
}

/// Expand every catalog form to `depth`.
pub fn catalog(depth: usize) -> Result<Vec<EigenformEntry>> {
    catalog_specs()
        .into_iter()
        .map(|(label, eta)| EigenformEntry::expand(label, eta, depth))
        .collect()
}

/// `a(m) a(n) == sum_{d | (m,n)} d^{k-1} a(mn/d^2)`, exactly.
pub fn hecke_check(entry: &EigenformEntry, m: u64, n: u64) -> Result<bool> {
    if m == 0 || n == 0 || gcd(m * n, entry.level()) != 1 {
        return Err(Error::Domain(format!(
            "Hecke relation needs m, n >= 1 coprime to N = {} (got {m}, {n})",
            entry.level()
        )));
    }
    let mn = m.checked_mul(n).ok_or(Error::Range {
        index: u64::MAX,
        limit: entry.depth() as u64,
    })?;
    let lhs = BigInt::from(entry.a(m)?) * BigInt::from(entry.a(n)?);
    let g = gcd(m, n);
    let mut rhs = BigInt::zero();
    for d in 1..=g {
        if !g.is_multiple_of(d) {
            continue;
        }
        let dk = BigInt::from(d).pow(entry.weight() - 1);
        rhs += dk * BigInt::from(entry.a(mn / (d * d))?);
    }
    Ok(lhs == rhs)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HeckeSuiteReport {
    pub label: String,
    pub limit: u64,
    pub pairs_checked: u64,
    pub failures: u64,
    pub first_failure: Option<(u64, u64)>,
}

impl HeckeSuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.pairs_checked > 0
    }
}

/// Every pair `m <= n` with `mn <= limit` and `gcd(mn, N) = 1`.
pub fn hecke_suite(entry: &EigenformEntry, limit: u64) -> Result<HeckeSuiteReport> {
    if limit as usize > entry.depth() {
        return Err(Error::Range {
            index: limit,
            limit: entry.depth() as u64,
        });
    }
    let level = entry.level();
    let mut report = HeckeSuiteReport {
        label: entry.label.clone(),
        limit,
        ..Default::default()
    };
    for m in 1..=limit {
        if gcd(m, level) != 1 {
            continue;
        }
        for n in m..=limit / m {
            if gcd(n, level) != 1 {
                continue;
            }
            report.pairs_checked += 1;
            if !hecke_check(entry, m, n)? {
                report.failures += 1;
                report.first_failure.get_or_insert((m, n));
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeligneReport {
    pub label: String,
    pub p_max: u64,
    pub primes_checked: usize,
    pub max_abs_lambda_p: f64,
    pub violations: Vec<u64>,
}

/// `|lambda(p)| <= 2 + tol` for primes `p <= p_max`, `p` not dividing N.
pub fn deligne_check(entry: &EigenformEntry, p_max: u64, tol: f64) -> Result<DeligneReport> {
    if p_max as usize > entry.depth() {
        return Err(Error::Range {
            index: p_max,
            limit: entry.depth() as u64,
        });
    }
    let mut report = DeligneReport {
        label: entry.label.clone(),
        p_max,
        primes_checked: 0,
        max_abs_lambda_p: 0.0,
        violations: Vec::new(),
    };
    for p in primes_up_to(p_max) {
        if entry.level().is_multiple_of(p) {
            continue;
        }
        let l = entry.lambda(p)?.abs();
        report.primes_checked += 1;
        report.max_abs_lambda_p = report.max_abs_lambda_p.max(l);
        if l > 2.0 + tol {
            report.violations.push(p);
        }
    }
    Ok(report)
}

/// Extend eigenvalues at primes to all `n <= x` through the Hecke
/// recursion at prime powers and multiplicativity.
pub fn extend_by_hecke(prime_lambdas: &BTreeMap<u64, f64>, level: u64, x: u64) -> Result<Vec<f64>> {
    let sieve = SpfSieve::new(x as usize);
    let mut out = vec![0.0f64; x as usize + 1];
    if x == 0 {
        return Ok(out);
    }
    out[1] = 1.0;
    for n in 2..=x as usize {
        let p = sieve.spf(n) as usize;
        let mut m = n / p;
        let mut pe = p;
        while m.is_multiple_of(p) {
            m /= p;
            pe *= p;
        }
        if m > 1 {
            out[n] = out[pe] * out[m];
            continue;
        }
        // n = p^e
        let lp = *prime_lambdas
            .get(&(p as u64))
            .ok_or_else(|| Error::IncompleteInput(format!("no eigenvalue for prime {p}")))?;
        out[n] = if n == p {
            lp
        } else if level.is_multiple_of(p as u64) {
            lp * out[n / p]
        } else {
            let prev2 = if n / p == p { 1.0 } else { out[n / (p * p)] };
            lp * out[n / p] - prev2
        };
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatakeAngle {
    pub p: u64,
    pub theta: f64,
}

const DELIGNE_SLACK: f64 = 1e-9;

/// The angle `theta` in `[0, pi]` with `lambda(p) = 2 cos theta`.
pub fn satake(p: u64, lambda_p: f64) -> Result<SatakeAngle> {
    if !lambda_p.is_finite() || lambda_p.abs() > 2.0 + DELIGNE_SLACK {
        return Err(Error::DeligneViolation(lambda_p));
    }
    let c = (lambda_p / 2.0).clamp(-1.0, 1.0);
    Ok(SatakeAngle { p, theta: c.acos() })
}

/// `sin((m+1) theta) / sin(theta)`, with the limits at 0 and pi.
pub fn lambda_power(theta: f64, m: u32) -> f64 {
    let s = theta.sin();
    if s.abs() < 1e-12 {
        let v = (m + 1) as f64;
        return if theta.cos() > 0.0 || m.is_multiple_of(2) { v } else { -v };
    }
    ((m + 1) as f64 * theta).sin() / s
}

// ---------------------------------------------------------------------------
// Coefficient cache files

pub fn cache_file_name(level: u64, weight: u32) -> String {
    format!("coeffs_N{level}_k{weight}.csv")
}

pub fn write_cache(dir: &Path, entry: &EigenformEntry) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(cache_file_name(entry.level(), entry.weight()));
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for (n, a) in entry.a.iter().enumerate().skip(1) {
        writeln!(w, "{n},{a}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Load a cache file written by [`write_cache`] and validate it: a(1) = 1,
/// consecutive indices, and the Hecke relations on a 1% sample of indices.
pub fn load_cache(path: &Path, label: &str, eta: EtaQuotient) -> Result<EigenformEntry> {
    let bad = |reason: String| Error::Cache {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut a = vec![0i128];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (n, v) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("line {}: expected 'n,a(n)'", i + 1)))?;
        let n: usize = n.trim().parse().map_err(|_| bad(format!("line {}: bad index", i + 1)))?;
        let v: i128 = v.trim().parse().map_err(|_| bad(format!("line {}: bad value", i + 1)))?;
        if n != a.len() {
            return Err(bad(format!("line {}: expected index {}, found {n}", i + 1, a.len())));
        }
        a.push(v);
    }
    if a.len() < 2 || a[1] != 1 {
        return Err(bad("a(1) != 1".into()));
    }
    let entry = EigenformEntry::from_coefficients(label, eta, a);
    if let Some(n) = sampled_hecke_failure(&entry, 97) {
        return Err(bad(format!("Hecke relation fails at n = {n}")));
    }
    Ok(entry)
}

/// Checks the multiplicative structure at indices `1 + stride * j`: the
/// coprime split `a(p^e m) = a(p^e) a(m)` and, at prime powers, the
/// three-term recursion. Returns the first failing index.
pub fn sampled_hecke_failure(entry: &EigenformEntry, stride: usize) -> Option<u64> {
    let depth = entry.depth();
    let level = entry.level();
    let k = entry.weight();
    let big = |n: usize| BigInt::from(entry.a[n]);
    let mut n = 1usize;
    while n <= depth {
        let f = crate::arith::factorize(n as u64);
        let ok = match f.as_slice() {
            [] => entry.a[1] == 1,
            [(p, e)] => {
                let p = *p as usize;
                if *e == 1 {
                    true
                } else if level.is_multiple_of(p as u64) {
                    big(p) * big(n / p) == big(n)
                } else {
                    let prev2 = if *e == 2 { BigInt::one() } else { big(n / (p * p)) };
                    big(p) * big(n / p) == big(n) + BigInt::from(p).pow(k - 1) * prev2
                }
            }
            [(p, e), ..] => {
                let pe = (*p as usize).pow(*e);
                big(pe) * big(n / pe) == big(n)
            }
        };
        if !ok {
            return Some(n as u64);
        }
        n += stride;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct product of (1 - q^n)^r factors, exact.
    fn brute_eta_product(factors: &[(u32, i32)], len: usize) -> Vec<BigInt> {
        let mut poly = vec![BigInt::zero(); len];
        poly[0] = BigInt::one();
        for &(m, r) in factors {
            for n in 1..len {
                let step = n * m as usize;
                if step >= len {
                    break;
                }
                for _ in 0..r {
                    for i in (step..len).rev() {
                        let t = poly[i - step].clone();
                        poly[i] -= t;
                    }
                }
            }
        }
        poly
    }

    #[test]
    fn eta_series_matches_product() {
        let e = eta_series(5);
        assert_eq!(e, vec![1, -1, -1, 0, 0, 1]);
        let e = eta_series(200);
        let b = brute_eta_product(&[(1, 1)], 201);
        for (x, y) in e.iter().zip(&b) {
            assert_eq!(BigInt::from(*x), *y);
        }
        assert_eq!(e[7], 1);
        assert!(e.iter().all(|&c| (-1..=1).contains(&c)));
    }

    #[test]
    fn catalog_matches_brute_force_expansion() {
        for (label, eta) in catalog_specs() {
            let a = expand_eta_quotient(&eta, 300).unwrap();
            let b = brute_eta_product(&eta.factors, 300);
            for n in 1..=300 {
                assert_eq!(BigInt::from(a[n]), b[n - 1], "{label} a({n})");
            }
        }
    }

    #[test]
    fn known_coefficients() {
        let delta = EigenformEntry::expand("delta", catalog_spec("delta").unwrap(), 20).unwrap();
        assert_eq!(delta.a(1).unwrap(), 1);
        assert_eq!(delta.a(2).unwrap(), -24);
        assert_eq!(delta.a(3).unwrap(), 252);
        assert_eq!(delta.a(4).unwrap(), -1472);
        assert_eq!(delta.a(6).unwrap(), -6048);
        assert_eq!(delta.a(7).unwrap(), -16744);
        let e11 = EigenformEntry::expand("d11k2", catalog_spec("d11k2").unwrap(), 20).unwrap();
        assert_eq!(
            (1..=10).map(|n| e11.a(n).unwrap()).collect::<Vec<_>>(),
            vec![1, -2, -1, 2, 1, 2, -2, 0, -2, -2]
        );
    }

    #[test]
    fn not_a_cusp_form() {
        let eta = EtaQuotient::new(vec![(1, 48)], 1).unwrap();
        assert!(matches!(
            expand_eta_quotient(&eta, 10),
            Err(Error::NotCuspForm { offset: 48 })
        ));
        assert!(EtaQuotient::new(vec![(1, 3)], 1).is_err());
        assert!(EtaQuotient::new(vec![(1, 2)], 1).is_err());
    }

    #[test]
    fn normalization() {
        let delta = EigenformEntry::expand("delta", catalog_spec("delta").unwrap(), 10).unwrap();
        assert_eq!(delta.lambda(1).unwrap(), 1.0);
        let l2 = delta.lambda(2).unwrap();
        assert!((l2 - (-24.0 / 2f64.powf(5.5))).abs() < 1e-15);
        assert!((l2 + 0.5303).abs() < 5e-5);
        let e11 = EigenformEntry::expand("d11k2", catalog_spec("d11k2").unwrap(), 10).unwrap();
        assert!((e11.lambda(2).unwrap() + std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(delta.lambda(11).is_err());
    }

    #[test]
    fn hecke_examples() {
        let delta = EigenformEntry::expand("delta", catalog_spec("delta").unwrap(), 100).unwrap();
        assert!(hecke_check(&delta, 2, 3).unwrap());
        assert!(hecke_check(&delta, 2, 2).unwrap());
        assert!(hecke_check(&delta, 1, 97).unwrap());
        assert!(matches!(hecke_check(&delta, 11, 11), Err(Error::Range { .. })));
        let e11 = EigenformEntry::expand("d11k2", catalog_spec("d11k2").unwrap(), 100).unwrap();
        assert!(hecke_check(&e11, 11, 2).is_err());
    }

    #[test]
    fn corrupted_coefficient_is_caught() {
        let mut delta =
            EigenformEntry::expand("delta", catalog_spec("delta").unwrap(), 200).unwrap();
        assert!(hecke_suite(&delta, 200).unwrap().passed());
        delta.corrupt(6, 1);
        let r = hecke_suite(&delta, 200).unwrap();
        assert!(!r.passed());
        assert_eq!(r.first_failure, Some((2, 3)));
    }

    #[test]
    fn extension_reproduces_expansion() {
        for (label, eta) in catalog_specs() {
            let e = EigenformEntry::expand(label, eta, 2000).unwrap();
            let primes: BTreeMap<u64, f64> = primes_up_to(2000)
                .into_iter()
                .map(|p| (p, e.lambda(p).unwrap()))
                .collect();
            let ext = extend_by_hecke(&primes, e.level(), 2000).unwrap();
            for n in 1..=2000u64 {
                let want = e.lambda(n).unwrap();
                assert!(
                    (ext[n as usize] - want).abs() <= 1e-10 * want.abs().max(1.0),
                    "{label} n = {n}"
                );
            }
        }
    }

    #[test]
    fn extension_needs_every_prime() {
        let mut primes = BTreeMap::new();
        primes.insert(2, 0.5);
        assert!(matches!(
            extend_by_hecke(&primes, 1, 10),
            Err(Error::IncompleteInput(_))
        ));
    }

    #[test]
    fn level_prime_powers_are_completely_multiplicative() {
        let e = EigenformEntry::expand("d11k2", catalog_spec("d11k2").unwrap(), 200).unwrap();
        let l11 = e.lambda(11).unwrap();
        assert!((e.lambda(121).unwrap() - l11 * l11).abs() < 1e-15);
    }

    #[test]
    fn satake_examples() {
        assert_eq!(lambda_power(satake(2, 2.0).unwrap().theta, 3), 4.0);
        assert_eq!(lambda_power(satake(2, -2.0).unwrap().theta, 3), -4.0);
        assert!((lambda_power(satake(2, 0.0).unwrap().theta, 2) + 1.0).abs() < 1e-15);
        assert!(satake(2, 2.0 + 1e-10).is_ok());
        assert!(matches!(satake(2, 2.1), Err(Error::DeligneViolation(_))));
        let delta = EigenformEntry::expand("delta", catalog_spec("delta").unwrap(), 10).unwrap();
        let th = satake(2, delta.lambda(2).unwrap()).unwrap().theta;
        assert!((lambda_power(th, 2) - delta.lambda(4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cache_roundtrip_and_validation() {
        let dir = std::env::temp_dir().join(format!("hecke-qf-cache-{}", std::process::id()));
        let entry = EigenformEntry::expand("d5k4", catalog_spec("d5k4").unwrap(), 500).unwrap();
        let path = write_cache(&dir, &entry).unwrap();
        assert!(path.ends_with("coeffs_N5_k4.csv"));
        let back = load_cache(&path, "d5k4", entry.eta.clone()).unwrap();
        assert_eq!(back.coefficients(), entry.coefficients());

        let text = std::fs::read_to_string(&path).unwrap();
        let broken = text.replacen("1,1\n", "1,2\n", 1);
        std::fs::write(&path, broken).unwrap();
        assert!(matches!(
            load_cache(&path, "d5k4", entry.eta.clone()),
            Err(Error::Cache { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }
}

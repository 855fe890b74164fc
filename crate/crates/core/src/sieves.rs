//! Sieved coefficient tables: squarefree indicator, omega, coprimality with
//! the level, `r*(n)` and `lambda(n)` up to a bound.
//!
//! Memory is about 13 bytes per index (8 for lambda, 4 for r*, 1 for omega,
//! two bits for the indicator arrays).
//!
//! # Binary layout
//!
//! [`CoefficientTable::write_binary`] writes, all little-endian:
//!
//! ```text
//! magic    b"HQFT"
//! version  u32 (= 1)
//! x_max    u64
//! level    u64
//! weight   u32
//! disc     i64
//! label    u32 length + UTF-8 bytes
//! mu_sq    (x_max + 1) bits packed into u64 words, LSB first
//! coprime  same packing
//! omega    (x_max + 1) bytes
//! r_star   (x_max + 1) u32
//! lambda   (x_max + 1) f64
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::eigenforms::EigenformEntry;
use crate::qforms::{r_star_prime_power, ClassNumberRecord, KroneckerCharacter};
use crate::{Error, Result};

/// Smallest-prime-factor table built by a linear sieve.
#[derive(Clone, Debug)]
pub struct SpfSieve {
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl SpfSieve {
    pub fn new(limit: usize) -> Self {
        let mut spf = vec![0u32; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let j = i * p as usize;
                if p > si || j > limit {
                    break;
                }
                spf[j] = p;
            }
        }
        if limit >= 1 {
            spf[1] = 1;
        }
        SpfSieve { spf, primes }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    #[inline]
    pub fn spf(&self, n: usize) -> u32 {
        self.spf[n]
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    #[inline]
    pub fn is_prime(&self, n: usize) -> bool {
        n >= 2 && self.spf[n] as usize == n
    }

    /// Factorization of `n <= limit`, primes increasing.
    pub fn factorize(&self, mut n: usize) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        out
    }
}

/// Packed bit array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitArray {
    words: Vec<u64>,
    len: usize,
}

impl BitArray {
    pub fn new(len: usize) -> Self {
        BitArray {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        let mask = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Squarefree indicator for `0..=x_max` (index 0 is clear).
pub fn moebius_squarefree_sieve(x_max: usize) -> BitArray {
    let mut bits = BitArray::new(x_max + 1);
    for n in 1..=x_max {
        bits.set(n, true);
    }
    let mut q = 2usize;
    while q * q <= x_max {
        let sq = q * q;
        let mut j = sq;
        while j <= x_max {
            bits.set(j, false);
            j += sq;
        }
        q += 1;
    }
    bits
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMeta {
    pub label: String,
    pub level: u64,
    pub weight: u32,
    pub disc: i64,
}

#[derive(Clone, Debug)]
pub struct CoefficientTable {
    x_max: usize,
    pub meta: TableMeta,
    mu_sq: BitArray,
    coprime: BitArray,
    omega: Vec<u8>,
    r_star: Vec<u32>,
    lambda: Vec<f64>,
}

impl CoefficientTable {
    pub fn x_max(&self) -> usize {
        self.x_max
    }

    pub fn level(&self) -> u64 {
        self.meta.level
    }

    pub fn disc(&self) -> i64 {
        self.meta.disc
    }

    #[inline]
    pub fn mu_sq(&self, n: usize) -> bool {
        self.mu_sq.get(n)
    }

    #[inline]
    pub fn coprime_to_level(&self, n: usize) -> bool {
        self.coprime.get(n)
    }

    #[inline]
    pub fn omega(&self, n: usize) -> u8 {
        self.omega[n]
    }

    #[inline]
    pub fn r_star(&self, n: usize) -> u32 {
        self.r_star[n]
    }

    #[inline]
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n]
    }

    /// Squarefree and coprime to the level.
    #[inline]
    pub fn in_support(&self, n: usize) -> bool {
        self.mu_sq.get(n) && self.coprime.get(n)
    }

    pub fn check_range(&self, x: u64) -> Result<()> {
        if x as usize > self.x_max {
            return Err(Error::Range {
                index: x,
                limit: self.x_max as u64,
            });
        }
        Ok(())
    }

    /// Replace the eigenvalue column, e.g. with synthetic values.
    pub fn with_lambda(mut self, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() != self.x_max + 1 {
            return Err(Error::Domain(format!(
                "lambda column has {} entries, table needs {}",
                lambda.len(),
                self.x_max + 1
            )));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"HQFT")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.x_max as u64).to_le_bytes())?;
        w.write_all(&self.meta.level.to_le_bytes())?;
        w.write_all(&self.meta.weight.to_le_bytes())?;
        w.write_all(&self.meta.disc.to_le_bytes())?;
        w.write_all(&(self.meta.label.len() as u32).to_le_bytes())?;
        w.write_all(self.meta.label.as_bytes())?;
        for bits in [&self.mu_sq, &self.coprime] {
            for word in &bits.words {
                w.write_all(&word.to_le_bytes())?;
            }
        }
        w.write_all(&self.omega)?;
        for v in &self.r_star {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.lambda {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::Domain(format!("table dump: {m}"));
        let io = |e: std::io::Error| Error::Domain(format!("table dump: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != b"HQFT" {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(io)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(bad("unsupported version"));
        }
        r.read_exact(&mut b8).map_err(io)?;
        let x_max = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8).map_err(io)?;
        let level = u64::from_le_bytes(b8);
        r.read_exact(&mut b4).map_err(io)?;
        let weight = u32::from_le_bytes(b4);
        r.read_exact(&mut b8).map_err(io)?;
        let disc = i64::from_le_bytes(b8);
        r.read_exact(&mut b4).map_err(io)?;
        let mut label = vec![0u8; u32::from_le_bytes(b4) as usize];
        r.read_exact(&mut label).map_err(io)?;
        let label = String::from_utf8(label).map_err(|_| bad("label is not UTF-8"))?;
        let len = x_max + 1;
        let mut read_bits = || -> Result<BitArray> {
            let mut bits = BitArray::new(len);
            for word in bits.words.iter_mut() {
                r.read_exact(&mut b8).map_err(io)?;
                *word = u64::from_le_bytes(b8);
            }
            Ok(bits)
        };
        let mu_sq = read_bits()?;
        let coprime = read_bits()?;
        let mut omega = vec![0u8; len];
        r.read_exact(&mut omega).map_err(io)?;
        let mut r_star = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut b4).map_err(io)?;
            r_star.push(u32::from_le_bytes(b4));
        }
        let mut lambda = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut b8).map_err(io)?;
            lambda.push(f64::from_le_bytes(b8));
        }
        Ok(CoefficientTable {
            x_max,
            meta: TableMeta {
                label,
                level,
                weight,
                disc,
            },
            mu_sq,
            coprime,
            omega,
            r_star,
            lambda,
        })
    }
}

/// Build the table for `entry` and the class-number-one discriminant `disc`.
pub fn build_table(entry: &EigenformEntry, disc: i64, x_max: usize) -> Result<CoefficientTable> {
    if x_max > entry.depth() {
        return Err(Error::Range {
            index: x_max as u64,
            limit: entry.depth() as u64,
        });
    }
    let record = ClassNumberRecord::compute(disc)?;
    record.principal()?;
    let chi = KroneckerCharacter::new(disc)?;
    let level = entry.level();
    let sieve = SpfSieve::new(x_max);

    let len = x_max + 1;
    let mut mu_sq = BitArray::new(len);
    let mut coprime = BitArray::new(len);
    let mut omega = vec![0u8; len];
    let mut r_star = vec![0u32; len];
    if x_max >= 1 {
        mu_sq.set(1, true);
        coprime.set(1, true);
        r_star[1] = 1;
    }
    for n in 2..len {
        let p = sieve.spf(n) as usize;
        let mut m = n / p;
        let mut e = 1u32;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        mu_sq.set(n, e == 1 && mu_sq.get(m));
        coprime.set(n, !level.is_multiple_of(p as u64) && coprime.get(m));
        omega[n] = omega[m] + 1;
        r_star[n] = r_star_prime_power(chi.eval(p as u64), e) * r_star[m];
    }
    let lambda = entry.lambdas()[..len].to_vec();
    Ok(CoefficientTable {
        x_max,
        meta: TableMeta {
            label: entry.label.clone(),
            level,
            weight: entry.weight(),
            disc,
        },
        mu_sq,
        coprime,
        omega,
        r_star,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith;
    use crate::eigenforms::{catalog_spec, EigenformEntry};
    use crate::qforms;

    #[test]
    fn spf_sieve_factors() {
        let s = SpfSieve::new(1000);
        for n in 2..=1000usize {
            assert_eq!(s.factorize(n), arith::factorize(n as u64));
        }
        assert_eq!(s.primes().len(), 168);
    }

    #[test]
    fn squarefree_sieve() {
        let bits = moebius_squarefree_sieve(1000);
        assert!(!bits.get(12));
        assert!(bits.get(30));
        assert!(bits.get(1));
        for n in 1..=1000u64 {
            assert_eq!(bits.get(n as usize), arith::is_squarefree(n));
        }
    }

    #[test]
    fn squarefree_density() {
        let bits = moebius_squarefree_sieve(1_000_000);
        let density = bits.count_ones() as f64 / 1e6;
        let six_over_pi2 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((0.6076..=0.6082).contains(&density), "{density}");
        assert!((density - six_over_pi2).abs() < 1e-4);
    }

    fn delta(depth: usize) -> EigenformEntry {
        EigenformEntry::expand("delta", catalog_spec("delta").unwrap(), depth).unwrap()
    }

    #[test]
    fn table_rows() {
        let t = build_table(&delta(100), -4, 100).unwrap();
        assert!(t.mu_sq(1) && t.omega(1) == 0 && t.r_star(1) == 1 && t.lambda(1) == 1.0);
        assert_eq!(t.r_star(25), 3);
        assert!((t.lambda(6) - t.lambda(2) * t.lambda(3)).abs() < 1e-15);
    }

    #[test]
    fn table_matches_pointwise_oracles() {
        let entry =
            EigenformEntry::expand("d11k2", catalog_spec("d11k2").unwrap(), 5000).unwrap();
        for d in qforms::CLASS_NUMBER_ONE {
            let t = build_table(&entry, d, 5000).unwrap();
            for n in 1..=5000u64 {
                let i = n as usize;
                assert_eq!(t.mu_sq(i), arith::is_squarefree(n));
                assert_eq!(t.omega(i) as u32, arith::omega(n));
                assert_eq!(t.coprime_to_level(i), arith::gcd(n, 11) == 1);
                assert_eq!(t.r_star(i) as u64, qforms::r_star(n, d), "D = {d}, n = {n}");
            }
        }
    }

    #[test]
    fn table_errors() {
        let e = delta(50);
        assert!(matches!(build_table(&e, -4, 51), Err(Error::Range { .. })));
        assert!(matches!(
            build_table(&e, -23, 50),
            Err(Error::UnsupportedDiscriminant { .. })
        ));
    }

    #[test]
    fn binary_dump_roundtrip() {
        let t = build_table(&delta(300), -7, 300).unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        let back = CoefficientTable::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.meta, t.meta);
        assert_eq!(back.x_max(), 300);
        for n in 0..=300 {
            assert_eq!(back.mu_sq(n), t.mu_sq(n));
            assert_eq!(back.coprime_to_level(n), t.coprime_to_level(n));
            assert_eq!(back.omega(n), t.omega(n));
            assert_eq!(back.r_star(n), t.r_star(n));
            assert_eq!(back.lambda(n).to_bits(), t.lambda(n).to_bits());
        }
        buf[0] = b'X';
        assert!(CoefficientTable::read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn deterministic_build() {
        let e = delta(2000);
        let a = build_table(&e, -3, 2000).unwrap();
        let b = build_table(&e, -3, 2000).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_binary(&mut x).unwrap();
        b.write_binary(&mut y).unwrap();
        assert_eq!(x, y);
    }
}

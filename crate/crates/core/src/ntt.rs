//! Number-theoretic transforms over a handful of 31-bit primes, used for
//! exact truncated power-series products, with CRT reconstruction.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

/// NTT-friendly primes (p - 1 divisible by 2^23 at least).
pub(crate) const PRIMES: [u32; 6] = [
    2113929217, 2013265921, 1811939329, 998244353, 754974721, 469762049,
];

/// The last prime is reserved for the consistency check of the CRT lift.
pub(crate) const RECONSTRUCTION_PRIMES: usize = 5;

/// Largest transform length supported by every prime in [`PRIMES`].
pub(crate) const MAX_LOG_SIZE: u32 = 23;

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

fn primitive_root(p: u32) -> u32 {
    let p = p as u64;
    let mut m = p - 1;
    let mut factors = Vec::new();
    let mut q = 2;
    while q * q <= m {
        if m.is_multiple_of(q) {
            factors.push(q);
            while m.is_multiple_of(q) {
                m /= q;
            }
        }
        q += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p)
        .find(|&g| factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1))
        .expect("prime has a primitive root") as u32
}

/// Montgomery arithmetic modulo a 31-bit prime.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Modulus {
    p: u32,
    p_inv_neg: u32, // -p^{-1} mod 2^32
    r2: u32,        // 2^64 mod p
}

impl Modulus {
    pub fn new(p: u32) -> Self {
        assert!(p % 2 == 1 && p < (1 << 31));
        let mut inv: u32 = 1;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u32.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r2 = ((1u128 << 64) % p as u128) as u32;
        Modulus {
            p,
            p_inv_neg: inv.wrapping_neg(),
            r2,
        }
    }

    #[inline]
    fn reduce(&self, t: u64) -> u32 {
        let m = (t as u32).wrapping_mul(self.p_inv_neg);
        let u = ((t + m as u64 * self.p as u64) >> 32) as u32;
        u.min(u.wrapping_sub(self.p))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.reduce(a as u64 * b as u64)
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        s.min(s.wrapping_sub(self.p))
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        let d = a.wrapping_sub(b);
        d.min(d.wrapping_add(self.p))
    }

    pub fn to_mont(&self, a: u32) -> u32 {
        self.mul(a % self.p, self.r2)
    }

    pub fn from_mont(&self, a: u32) -> u32 {
        self.reduce(a as u64)
    }

    /// Montgomery form of a signed integer.
    pub fn from_i64(&self, v: i64) -> u32 {
        self.to_mont(v.rem_euclid(self.p as i64) as u32)
    }

    fn pow(&self, b: u32, mut e: u64) -> u32 {
        let mut r = self.to_mont(1);
        let mut b = b;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }
}

/// Precomputed twiddles for transforms of length up to `1 << log_n`.
pub(crate) struct Ntt {
    m: Modulus,
    log_n: u32,
    roots: Vec<u32>,
    inv_roots: Vec<u32>,
}

impl Ntt {
    pub fn new(p: u32, log_n: u32) -> Self {
        assert!((p - 1).trailing_zeros() >= log_n, "prime does not support 2^{log_n}");
        let m = Modulus::new(p);
        let g = m.to_mont(primitive_root(p));
        let n = 1usize << log_n;
        let w = m.pow(g, ((p - 1) >> log_n) as u64);
        let w_inv = m.pow(w, (p - 2) as u64);
        // roots[half + j] = w_len^j for the stage with half-length `half`
        let mut roots = vec![0u32; n.max(2)];
        let mut inv_roots = vec![0u32; n.max(2)];
        let mut half = n / 2;
        let mut step = w;
        let mut step_inv = w_inv;
        while half >= 1 {
            let (mut cur, mut cur_inv) = (m.to_mont(1), m.to_mont(1));
            for j in 0..half {
                roots[half + j] = cur;
                inv_roots[half + j] = cur_inv;
                cur = m.mul(cur, step);
                cur_inv = m.mul(cur_inv, step_inv);
            }
            step = m.mul(step, step);
            step_inv = m.mul(step_inv, step_inv);
            half /= 2;
        }
        Ntt {
            m,
            log_n,
            roots,
            inv_roots,
        }
    }

    pub fn modulus(&self) -> &Modulus {
        &self.m
    }

    /// Twiddles of one stage as a contiguous slice, copying only when the
    /// transform is shorter than the table.
    fn stage_twiddles<'a>(
        &self,
        table: &'a [u32],
        half: usize,
        scale: usize,
    ) -> std::borrow::Cow<'a, [u32]> {
        let start = half * scale;
        if scale == 1 {
            std::borrow::Cow::Borrowed(&table[start..start + half])
        } else {
            std::borrow::Cow::Owned((0..half).map(|j| table[start + j * scale]).collect())
        }
    }

    /// Decimation-in-frequency transform: natural order in, bit-reversed
    /// order out.
    fn forward(&self, a: &mut [u32]) {
        let n = a.len();
        assert!(n.is_power_of_two() && n <= 1 << self.log_n);
        let scale = (1usize << self.log_n) / n;
        let m = &self.m;
        let mut half = n / 2;
        while half >= 1 {
            let tw = self.stage_twiddles(&self.roots, half, scale);
            for block in a.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw.iter()) {
                    let (u, v) = (*x, *y);
                    *x = m.add(u, v);
                    *y = m.mul(m.sub(u, v), w);
                }
            }
            half /= 2;
        }
    }

    /// Decimation-in-time inverse: bit-reversed order in, natural order
    /// out, including the 1/n scaling.
    fn inverse(&self, a: &mut [u32]) {
        let n = a.len();
        assert!(n.is_power_of_two() && n <= 1 << self.log_n);
        let scale = (1usize << self.log_n) / n;
        let m = &self.m;
        let mut half = 1;
        while half < n {
            let tw = self.stage_twiddles(&self.inv_roots, half, scale);
            for block in a.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw.iter()) {
                    let u = *x;
                    let v = m.mul(*y, w);
                    *x = m.add(u, v);
                    *y = m.sub(u, v);
                }
            }
            half *= 2;
        }
        let n_inv = m.pow(m.to_mont(n as u32), (m.p - 2) as u64);
        for x in a.iter_mut() {
            *x = m.mul(*x, n_inv);
        }
    }

    /// First `len` coefficients of `a * b` (Montgomery representation).
    pub fn mul_truncated(&self, a: &[u32], b: &[u32], len: usize) -> Vec<u32> {
        let need = (a.len().min(len) + b.len().min(len)).saturating_sub(1).max(1);
        let size = need.next_power_of_two();
        let mut fa = vec![0u32; size];
        fa[..a.len().min(len)].copy_from_slice(&a[..a.len().min(len)]);
        self.forward(&mut fa);
        let same = std::ptr::eq(a, b);
        if same {
            for x in fa.iter_mut() {
                *x = self.m.mul(*x, *x);
            }
        } else {
            let mut fb = vec![0u32; size];
            fb[..b.len().min(len)].copy_from_slice(&b[..b.len().min(len)]);
            self.forward(&mut fb);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x = self.m.mul(*x, *y);
            }
        }
        self.inverse(&mut fa);
        fa.truncate(len);
        fa.resize(len, 0);
        fa
    }
}

/// Lifts residues modulo `PRIMES[..RECONSTRUCTION_PRIMES]` to the symmetric
/// range by Garner's algorithm.
///
/// The mixed-radix digits are computed in 64-bit arithmetic. The value is
/// then assembled modulo 2^128, which is exact whenever the true symmetric
/// lift fits in an `i128`; the sign is decided by comparing digits with
/// those of `floor(P / 2)`. Callers confirm the result against the spare
/// prime.
pub(crate) struct Crt {
    // (prod_{j < i} p_j)^{-1} mod p_i
    inverses: [u64; RECONSTRUCTION_PRIMES],
    // prod_{j < i} p_j modulo 2^128
    radix: [u128; RECONSTRUCTION_PRIMES],
    // prod_{j < i} p_j modulo p_k, indexed [i][k]
    radix_mod: [[u64; RECONSTRUCTION_PRIMES]; RECONSTRUCTION_PRIMES],
    // mixed-radix digits of floor(P / 2), least significant first
    half_digits: [u64; RECONSTRUCTION_PRIMES],
    // P modulo 2^128
    total: u128,
    half: BigInt,
}

impl Crt {
    pub fn new() -> Self {
        let ps: Vec<u64> = PRIMES[..RECONSTRUCTION_PRIMES].iter().map(|&p| p as u64).collect();
        let mut inverses = [0u64; RECONSTRUCTION_PRIMES];
        let mut radix = [0u128; RECONSTRUCTION_PRIMES];
        let mut radix_mod = [[0u64; RECONSTRUCTION_PRIMES]; RECONSTRUCTION_PRIMES];
        let mut acc = BigInt::from(1u32);
        for i in 0..RECONSTRUCTION_PRIMES {
            for k in 0..RECONSTRUCTION_PRIMES {
                radix_mod[i][k] = (&acc % BigInt::from(ps[k])).to_u64().unwrap();
            }
            inverses[i] = pow_mod(radix_mod[i][i], ps[i] - 2, ps[i]);
            radix[i] = (&acc % (BigInt::from(1u8) << 128usize)).to_u128().unwrap();
            acc *= ps[i];
        }
        let half: BigInt = &acc / 2u32;
        let mut rest = half.clone();
        let mut half_digits = [0u64; RECONSTRUCTION_PRIMES];
        for (i, d) in half_digits.iter_mut().enumerate() {
            *d = (&rest % BigInt::from(ps[i])).to_u64().unwrap();
            rest /= BigInt::from(ps[i]);
        }
        Crt {
            inverses,
            radix,
            radix_mod,
            half_digits,
            total: (&acc % (BigInt::from(1u8) << 128usize)).to_u128().unwrap(),
            half,
        }
    }

    /// Symmetric lift of plain (non-Montgomery) residues, as an `i128`.
    pub fn lift(&self, residues: &[u32]) -> i128 {
        let mut digits = [0u64; RECONSTRUCTION_PRIMES];
        for i in 0..RECONSTRUCTION_PRIMES {
            let p = PRIMES[i] as u64;
            // value of the digits found so far, modulo p
            let mut cur = 0u64;
            for j in 0..i {
                cur = (cur + digits[j] * self.radix_mod[j][i]) % p;
            }
            let diff = (residues[i] as u64 + p - cur) % p;
            digits[i] = diff * self.inverses[i] % p;
        }
        let mut value = 0u128;
        for i in 0..RECONSTRUCTION_PRIMES {
            value = value.wrapping_add((digits[i] as u128).wrapping_mul(self.radix[i]));
        }
        let above_half = digits
            .iter()
            .rev()
            .zip(self.half_digits.iter().rev())
            .find(|(d, h)| d != h)
            .is_some_and(|(d, h)| d > h);
        if above_half {
            value = value.wrapping_sub(self.total);
        }
        value as i128
    }

    pub fn bound(&self) -> &BigInt {
        &self.half
    }
}

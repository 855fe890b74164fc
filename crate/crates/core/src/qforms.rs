//! Positive-definite binary quadratic forms `ax^2 + bxy + cy^2`, their
//! reduction and class numbers, the Kronecker character `(D/.)` and
//! representation counts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{factorize, gcd, isqrt, isqrt_i128};
use crate::{Error, Result};

/// The thirteen negative discriminants of class number one (fundamental
/// and non-fundamental).
pub const CLASS_NUMBER_ONE: [i64; 13] =
    [-3, -4, -7, -8, -11, -12, -16, -19, -27, -28, -43, -67, -163];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    /// A positive-definite primitive form.
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        let f = QuadForm { a, b, c };
        if f.disc() >= 0 || a <= 0 {
            return Err(Error::Domain(format!(
                "form {f} is not positive definite (D = {})",
                f.disc()
            )));
        }
        if gcd(gcd(a, b), c) != 1 {
            return Err(Error::Domain(format!("form {f} is not primitive")));
        }
        Ok(f)
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// Reduce a positive-definite form to the unique reduced form in its
/// proper equivalence class.
pub fn reduce_form(f: QuadForm) -> Result<QuadForm> {
    let d = f.disc();
    if d >= 0 || f.a <= 0 {
        return Err(Error::Domain(format!(
            "cannot reduce {f}: not positive definite (D = {d})"
        )));
    }
    let (mut a, mut b, mut c) = (f.a, f.b, f.c);
    loop {
        // b into (-a, a]
        if b <= -a || b > a {
            let two_a = 2 * a;
            let k = (a - b).div_euclid(two_a);
            b += two_a * k;
            c = (b * b - d) / (4 * a);
        }
        if a > c {
            std::mem::swap(&mut a, &mut c);
            b = -b;
            continue;
        }
        break;
    }
    if b < 0 && (a == c || -b == a) {
        b = -b;
    }
    Ok(QuadForm { a, b, c })
}

fn check_disc(d: i64) -> Result<()> {
    if d >= 0 {
        return Err(Error::Domain(format!("discriminant {d} is not negative")));
    }
    if !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(Error::Domain(format!("discriminant {d} is not 0 or 1 mod 4")));
    }
    Ok(())
}

/// All primitive reduced forms of discriminant `d`; the length is h(d).
pub fn enumerate_reduced_forms(d: i64) -> Result<Vec<QuadForm>> {
    check_disc(d)?;
    let a_max = isqrt(d.unsigned_abs() / 3) as i64;
    let mut forms = Vec::new();
    for a in 1..=a_max {
        for b in -a + 1..=a {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (a == c && b < 0) {
                continue;
            }
            if gcd(gcd(a, b), c) != 1 {
                continue;
            }
            forms.push(QuadForm { a, b, c });
        }
    }
    Ok(forms)
}

/// Number of roots of unity in the order of discriminant `d`.
pub fn unit_count(d: i64) -> u32 {
    match d {
        -3 => 6,
        -4 => 4,
        _ => 2,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassNumberRecord {
    pub disc: i64,
    pub forms: Vec<QuadForm>,
    pub h: usize,
    pub w_d: u32,
}

impl ClassNumberRecord {
    pub fn compute(d: i64) -> Result<Self> {
        let forms = enumerate_reduced_forms(d)?;
        Ok(ClassNumberRecord {
            disc: d,
            h: forms.len(),
            w_d: unit_count(d),
            forms,
        })
    }

    /// The unique reduced form, for class number one.
    pub fn principal(&self) -> Result<QuadForm> {
        if self.h != 1 {
            return Err(Error::UnsupportedDiscriminant {
                disc: self.disc,
                class_number: self.h,
            });
        }
        Ok(self.forms[0])
    }
}

/// The class-number-one form for `d`, or an unsupported-discriminant error.
pub fn class_one_form(d: i64) -> Result<QuadForm> {
    ClassNumberRecord::compute(d)?.principal()
}

/// Jacobi symbol (a/n) for odd positive n.
fn jacobi(a: i64, n: i64) -> i32 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol (d/n) for n >= 1.
pub fn chi_d(d: i64, n: u64) -> i32 {
    assert!(n >= 1, "chi_d is defined for n >= 1");
    let mut n = n as i64;
    let mut value = 1;
    if n % 2 == 0 {
        if d % 2 == 0 {
            return 0;
        }
        let two = match d.rem_euclid(8) {
            1 | 7 => 1,
            _ => -1,
        };
        while n % 2 == 0 {
            n /= 2;
            value *= two;
        }
    }
    value * jacobi(d, n)
}

/// The character n -> (D/n), tabulated over one period.
#[derive(Clone, Debug)]
pub struct KroneckerCharacter {
    disc: i64,
    table: Vec<i8>,
}

impl KroneckerCharacter {
    pub fn new(d: i64) -> Result<Self> {
        check_disc(d)?;
        let m = d.unsigned_abs();
        let table = (0..m)
            .map(|r| if r == 0 { 0 } else { chi_d(d, r) as i8 })
            .collect();
        Ok(KroneckerCharacter { disc: d, table })
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn modulus(&self) -> u64 {
        self.disc.unsigned_abs()
    }

    #[inline]
    pub fn eval(&self, n: u64) -> i32 {
        self.table[(n % self.table.len() as u64) as usize] as i32
    }
}

/// r*(p^e) = sum_{j <= e} chi(p)^j.
#[inline]
pub fn r_star_prime_power(chi_p: i32, e: u32) -> u32 {
    match chi_p {
        1 => e + 1,
        0 => 1,
        _ => u32::from(e.is_multiple_of(2)),
    }
}

/// sum_{d | n} chi_D(d), evaluated through the factorization of n.
pub fn r_star(n: u64, d: i64) -> u64 {
    assert!(n >= 1, "r_star is defined for n >= 1");
    factorize(n)
        .into_iter()
        .map(|(p, e)| r_star_prime_power(chi_d(d, p), e) as u64)
        .product()
}

/// Number of representations of `n` by the class-number-one form of
/// discriminant `d`, via `w_D * r*(n)`.
pub fn r_q(n: u64, d: i64) -> Result<u64> {
    let record = ClassNumberRecord::compute(d)?;
    record.principal()?;
    Ok(record.w_d as u64 * r_star(n, d))
}

/// Exact count of (x, y) in Z^2 with f(x, y) = n.
///
/// For fixed y the equation is a quadratic in x with discriminant
/// D y^2 + 4 a n, which is negative once |y| > sqrt(4an/|D|).
pub fn lattice_count(f: &QuadForm, n: u64) -> u64 {
    let (a, b, c) = (f.a as i128, f.b as i128, f.c as i128);
    let d = f.disc() as i128;
    let n = n as i128;
    let y_max = isqrt_i128(4 * a * n / -d);
    let mut count = 0u64;
    for y in -y_max..=y_max {
        let disc = d * y * y + 4 * a * n;
        if disc < 0 {
            continue;
        }
        let s = isqrt_i128(disc);
        if s * s != disc {
            continue;
        }
        let roots: &[i128] = if s == 0 { &[0] } else { &[s, -s] };
        for &r in roots {
            let num = -b * y + r;
            if num % (2 * a) == 0 {
                let x = num / (2 * a);
                debug_assert_eq!(a * x * x + b * x * y + c * y * y, n);
                count += 1;
            }
        }
    }
    count
}

/// Representation counts of every `n <= x_max` by the positive definite
/// form `f`, indexed by `n` (entry 0 counts the origin).
///
/// Enumerates lattice points row by row, so the cost is proportional to
/// the area of the ellipse `f(x, y) <= x_max`.
pub fn lattice_counts_upto(f: &QuadForm, x_max: u64) -> Vec<u64> {
    let (a, b, c) = (f.a as i128, f.b as i128, f.c as i128);
    let d = f.disc() as i128;
    let big_x = x_max as i128;
    let mut counts = vec![0u64; x_max as usize + 1];
    let y_max = isqrt_i128(4 * a * big_x / -d);
    for y in -y_max..=y_max {
        let disc = d * y * y + 4 * a * big_x;
        if disc < 0 {
            continue;
        }
        let s = isqrt_i128(disc);
        // roots of a x^2 + b y x + (c y^2 - X), widened by one for rounding
        let lo = (-b * y - s).div_euclid(2 * a) - 1;
        let hi = (-b * y + s).div_euclid(2 * a) + 1;
        for x in lo..=hi {
            let v = a * x * x + b * x * y + c * y * y;
            if v <= big_x {
                counts[v as usize] += 1;
            }
        }
    }
    counts
}

/// One representation (x, y) of `n`, if any.
pub fn find_representation(f: &QuadForm, n: u64) -> Option<(i64, i64)> {
    let (a, b) = (f.a as i128, f.b as i128);
    let d = f.disc() as i128;
    let n = n as i128;
    let y_max = isqrt_i128(4 * a * n / -d);
    for y in 0..=y_max {
        let disc = d * y * y + 4 * a * n;
        if disc < 0 {
            continue;
        }
        let s = isqrt_i128(disc);
        if s * s != disc {
            continue;
        }
        for r in [s, -s] {
            let num = -b * y + r;
            if num % (2 * a) == 0 {
                return Some(((num / (2 * a)) as i64, y as i64));
            }
        }
    }
    None
}

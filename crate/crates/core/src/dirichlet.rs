//! Local Euler factors, truncated Euler products and coefficient-level
//! checks of Dirichlet series factorizations.
//!
//! Polynomials are in the variable `x = p^{-s}` and stored as coefficient
//! vectors, constant term first. Dirichlet series are expanded prime by
//! prime as power series in `x` up to the largest power of `p` below the
//! bound, then merged multiplicatively.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{self, gcd};
use crate::eigenforms::EigenformEntry;
use crate::qforms::{self, ClassNumberRecord, KroneckerCharacter, CLASS_NUMBER_ONE};
use crate::sieves::SpfSieve;
use crate::summation::KahanSum;
use crate::{Error, Result};

/// Largest `n_max` accepted by the coefficient checks.
pub const MAX_CHECK_LENGTH: usize = 10_000;

/// Default truncation point of Euler products.
pub const DEFAULT_P_CUT: u64 = 1_000_000;

/// Number of terms of the direct sum for `L(1, chi_D)`.
pub const L1_DIRECT_TERMS: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFactor {
    pub p: u64,
    /// Coefficients in `x = p^{-s}`, `poly[0] == 1`.
    pub poly: Vec<f64>,
    /// When set the factor is `1 / poly(x)`.
    pub inverted: bool,
}

impl LocalFactor {
    pub fn new(p: u64, poly: Vec<f64>, inverted: bool) -> Result<Self> {
        if poly.first() != Some(&1.0) {
            return Err(Error::Domain(format!(
                "local factor at p = {p} must have constant term 1"
            )));
        }
        Ok(LocalFactor { p, poly, inverted })
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        let v = poly_eval(&self.poly, x);
        if self.inverted {
            v.inv()
        } else {
            v
        }
    }

    /// Power series in `x` up to degree `deg` inclusive.
    pub fn series(&self, deg: usize) -> Vec<f64> {
        if self.inverted {
            series_inverse(&self.poly, deg)
        } else {
            let mut s = self.poly.clone();
            s.resize(deg + 1, 0.0);
            s
        }
    }
}

fn poly_eval(poly: &[f64], x: Complex64) -> Complex64 {
    poly.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Product of two polynomials (or series), truncated to `deg` if given.
pub fn poly_mul(a: &[f64], b: &[f64], deg: Option<usize>) -> Vec<f64> {
    let full = a.len() + b.len() - 1;
    let len = deg.map_or(full, |d| (d + 1).min(full));
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            if i + j < len {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn poly_pow(a: &[f64], e: u32, deg: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..e {
        out = poly_mul(&out, a, Some(deg));
    }
    out
}

/// Power series of `1 / poly` to degree `deg`.
pub fn series_inverse(poly: &[f64], deg: usize) -> Vec<f64> {
    debug_assert_eq!(poly[0], 1.0);
    let mut inv = vec![0.0; deg + 1];
    inv[0] = 1.0;
    for n in 1..=deg {
        let mut acc = 0.0;
        for k in 1..=n.min(poly.len() - 1) {
            acc -= poly[k] * inv[n - k];
        }
        inv[n] = acc;
    }
    inv
}

/// `L_p(s, f)^{-1}` as a polynomial in `x`.
pub fn hecke_local_inverse(lambda_p: f64, in_level: bool) -> Vec<f64> {
    if in_level {
        vec![1.0, -lambda_p]
    } else {
        vec![1.0, -lambda_p, 1.0]
    }
}

/// `L_p(s, f x chi)^{-1}`: linear when `p | N` or `chi(p) = 0`.
pub fn twisted_local_inverse(lambda_p: f64, chi_p: i32, in_level: bool) -> Vec<f64> {
    let c = lambda_p * chi_p as f64;
    if in_level || chi_p == 0 {
        vec![1.0, -c]
    } else {
        vec![1.0, -c, 1.0]
    }
}

/// Local factor of `G` as a polynomial in `x`, built from its definition
/// `(1 + lambda (1 + chi) x [p not | N]) L_p(f)^{-1} L_p(f x chi)^{-1}`.
pub fn local_g_poly(chi_p: i32, lambda_p: f64, in_level: bool) -> Vec<f64> {
    let head = if in_level {
        vec![1.0]
    } else {
        vec![1.0, lambda_p * (1 + chi_p) as f64]
    };
    let lf = hecke_local_inverse(lambda_p, in_level);
    let lt = twisted_local_inverse(lambda_p, chi_p, in_level);
    poly_mul(&poly_mul(&head, &lf, None), &lt, None)
}

fn check_half_plane(s: Complex64) -> Result<()> {
    if s.re > 0.5 {
        Ok(())
    } else {
        Err(Error::OutsideConvergence { re: s.re, im: s.im })
    }
}

#[inline]
fn p_pow_neg(p: u64, s: Complex64) -> Complex64 {
    (-s * (p as f64).ln()).exp()
}

/// `G_p(s)` computed the definitional way.
pub fn local_g(p: u64, chi_p: i32, lambda_p: f64, in_level: bool, s: Complex64) -> Result<Complex64> {
    check_half_plane(s)?;
    Ok(poly_eval(&local_g_poly(chi_p, lambda_p, in_level), p_pow_neg(p, s)))
}

/// The closed-form five-term polynomial for `p not | N`, together with the
/// inverse quadratic factor attached to `p | D`.
pub fn displayed_g(p: u64, chi_p: i32, lambda_p: f64, divides_disc: bool, s: Complex64) -> Result<Complex64> {
    check_half_plane(s)?;
    let x = p_pow_neg(p, s);
    let (l, c) = (lambda_p, chi_p as f64);
    let l2 = l * l;
    let poly = [
        1.0,
        0.0,
        2.0 - 2.0 * l2 - l2 * c,
        l * (1.0 + c) * (1.0 + l2 * c),
        1.0 - 2.0 * l2 * (1.0 + c),
        l * (1.0 + c),
    ];
    let mut v = poly_eval(&poly, x);
    if divides_disc {
        v /= poly_eval(&[1.0, -l * c, 1.0], x);
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GDiscrepancy {
    pub p: u64,
    pub chi_p: i32,
    pub lambda_p: f64,
    pub definitional: f64,
    pub displayed: f64,
    pub abs_diff: f64,
}

/// Compare [`displayed_g`] with [`local_g`] at real `s` for all primes
/// `p <= p_max` not dividing the level; returns the primes where the two
/// differ by more than `tol`.
pub fn g_display_discrepancies(
    entry: &EigenformEntry,
    disc: i64,
    p_max: u64,
    s: f64,
    tol: f64,
) -> Result<Vec<GDiscrepancy>> {
    let chi = KroneckerCharacter::new(disc)?;
    let s = Complex64::new(s, 0.0);
    let mut out = Vec::new();
    for p in arith::primes_up_to(p_max) {
        if entry.level().is_multiple_of(p) {
            continue;
        }
        let chi_p = chi.eval(p);
        let lambda_p = entry.lambda(p)?;
        let def = local_g(p, chi_p, lambda_p, false, s)?.re;
        let disp = displayed_g(p, chi_p, lambda_p, chi_p == 0, s)?.re;
        if (def - disp).abs() > tol {
            out.push(GDiscrepancy {
                p,
                chi_p,
                lambda_p,
                definitional: def,
                displayed: disp,
                abs_diff: (def - disp).abs(),
            });
        }
    }
    Ok(out)
}

/// Expand a product of per-prime power series into a Dirichlet series on
/// `1..=n_max`. `local(p, e)` returns the series at `p` to degree `e`.
fn merge_dirichlet<F>(n_max: usize, mut local: F) -> Vec<f64>
where
    F: FnMut(u64, usize) -> Vec<f64>,
{
    let sieve = SpfSieve::new(n_max);
    let mut per_prime: Vec<Vec<f64>> = vec![Vec::new(); n_max + 1];
    for &p in sieve.primes() {
        let p = p as usize;
        let mut e = 0;
        let mut q = 1usize;
        while q * p <= n_max {
            q *= p;
            e += 1;
        }
        per_prime[p] = local(p as u64, e);
    }
    let mut c = vec![0.0; n_max + 1];
    if n_max >= 1 {
        c[1] = 1.0;
    }
    for n in 2..=n_max {
        let p = sieve.spf(n) as usize;
        let mut m = n / p;
        let mut e = 1;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        c[n] = per_prime[p][e] * c[m];
    }
    c
}

fn check_length(n_max: usize) -> Result<()> {
    if n_max == 0 || n_max > MAX_CHECK_LENGTH {
        return Err(Error::Domain(format!(
            "n_max = {n_max} must lie in 1..={MAX_CHECK_LENGTH}"
        )));
    }
    Ok(())
}

fn check_catalog_disc(disc: i64) -> Result<()> {
    if CLASS_NUMBER_ONE.contains(&disc) {
        Ok(())
    } else {
        let h = ClassNumberRecord::compute(disc).map(|r| r.h).unwrap_or(0);
        Err(Error::UnsupportedDiscriminant {
            disc,
            class_number: h,
        })
    }
}

/// Max deviation between the expansion of `L(s,f) L(s,f x chi) G(s)` and
/// the coefficients `mu^2(n) lambda(n) r*(n) [gcd(n, N) = 1]`.
pub fn coefficient_identity_check(entry: &EigenformEntry, disc: i64, n_max: usize) -> Result<f64> {
    check_length(n_max)?;
    check_catalog_disc(disc)?;
    entry.lambda(n_max as u64)?;
    let chi = KroneckerCharacter::new(disc)?;
    let level = entry.level();
    let lambdas = entry.lambdas();
    let lhs = merge_dirichlet(n_max, |p, e| {
        let l = lambdas[p as usize];
        let c = chi.eval(p);
        let in_level = level.is_multiple_of(p);
        let lf = series_inverse(&hecke_local_inverse(l, in_level), e);
        let lt = series_inverse(&twisted_local_inverse(l, c, in_level), e);
        let g = local_g_poly(c, l, in_level);
        poly_mul(&poly_mul(&lf, &lt, Some(e)), &g, Some(e))
    });
    let mut worst = 0.0f64;
    for n in 1..=n_max as u64 {
        let rhs = if arith::is_squarefree(n) && gcd(n, level) == 1 {
            lambdas[n as usize] * qforms::r_star(n, disc) as f64
        } else {
            0.0
        };
        worst = worst.max((lhs[n as usize] - rhs).abs());
    }
    Ok(worst)
}

/// Local factor of `P(s)` at `p`.
pub fn p_local_poly(chi_p: i32, eta: u32, in_level: bool) -> Vec<f64> {
    let base = poly_mul(&[1.0, -1.0], &[1.0, -(chi_p as f64)], None);
    let powered = poly_pow(&base, eta, 2 * eta as usize);
    if in_level {
        powered
    } else {
        poly_mul(&powered, &[1.0, eta as f64 * (1 + chi_p) as f64], None)
    }
}

/// Max deviation between the expansion of `zeta^eta L(s,chi)^eta P(s)` and
/// `mu^2(n) eta^omega(n) r*(n) [gcd(n, N) = 1]`.
pub fn d_series_check(eta: u32, disc: i64, level: u64, n_max: usize) -> Result<f64> {
    check_length(n_max)?;
    check_catalog_disc(disc)?;
    if eta == 0 || level == 0 {
        return Err(Error::Domain("eta and the level must be positive".into()));
    }
    let chi = KroneckerCharacter::new(disc)?;
    let lhs = merge_dirichlet(n_max, |p, e| {
        let c = chi.eval(p);
        let zeta = series_inverse(&poly_pow(&[1.0, -1.0], eta, e), e);
        let l = series_inverse(&poly_pow(&[1.0, -(c as f64)], eta, e), e);
        let pp = p_local_poly(c, eta, level.is_multiple_of(p));
        poly_mul(&poly_mul(&zeta, &l, Some(e)), &pp, Some(e))
    });
    let mut worst = 0.0f64;
    for n in 1..=n_max as u64 {
        let rhs = if arith::is_squarefree(n) && gcd(n, level) == 1 {
            (eta as f64).powi(arith::omega(n) as i32) * qforms::r_star(n, disc) as f64
        } else {
            0.0
        };
        worst = worst.max((lhs[n as usize] - rhs).abs());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerProductValue {
    pub s: Complex64,
    pub value: Complex64,
    pub p_cut: u64,
    pub tail_bound: f64,
}

/// Truncated Euler product of `P(s)` over `p <= p_cut`.
///
/// Beyond the cut the linear terms of the log-factor cancel, and for
/// `p^{Re s} >= 4 eta` the remainder is at most `C |x|^2` with
/// `C = 2 eta (1 + 2 eta)`. Summing over all integers `n > p_cut` bounds the
/// log of the tail by `T = C p_cut^{1 - 2 Re s} / (2 Re s - 1)`, and
/// `tail_bound = |value| (e^T - 1)`.
pub fn p_euler(s: Complex64, disc: i64, level: u64, eta: u32, p_cut: u64) -> Result<EulerProductValue> {
    check_half_plane(s)?;
    check_catalog_disc(disc)?;
    if eta == 0 || level == 0 {
        return Err(Error::Domain("eta and the level must be positive".into()));
    }
    let chi = KroneckerCharacter::new(disc)?;
    let mut value = Complex64::new(1.0, 0.0);
    for p in arith::primes_up_to(p_cut) {
        let poly = p_local_poly(chi.eval(p), eta, level.is_multiple_of(p));
        value *= poly_eval(&poly, p_pow_neg(p, s));
    }
    let sigma = s.re;
    let eta_f = eta as f64;
    let tail_bound = if (p_cut as f64).powf(sigma) >= 4.0 * eta_f && p_cut >= 2 {
        let c = 2.0 * eta_f * (1.0 + 2.0 * eta_f);
        let t = c * (p_cut as f64).powf(1.0 - 2.0 * sigma) / (2.0 * sigma - 1.0);
        value.norm() * t.exp_m1()
    } else {
        f64::INFINITY
    };
    Ok(EulerProductValue {
        s,
        value,
        p_cut,
        tail_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum L1Method {
    DirectSum,
    ClassNumberFormula,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Value {
    pub disc: i64,
    pub method: L1Method,
    pub value: f64,
    pub tail_bound: f64,
}

/// `L(1, chi_D)` by the truncated series or by the class number formula.
pub fn l1_chi(disc: i64, method: L1Method) -> Result<L1Value> {
    check_catalog_disc(disc)?;
    match method {
        L1Method::DirectSum => {
            let chi = KroneckerCharacter::new(disc)?;
            let mut sum = KahanSum::new();
            for n in 1..=L1_DIRECT_TERMS {
                let c = chi.eval(n);
                if c != 0 {
                    sum.add(c as f64 / n as f64);
                }
            }
            Ok(L1Value {
                disc,
                method,
                value: sum.value(),
                tail_bound: disc.unsigned_abs() as f64 / L1_DIRECT_TERMS as f64,
            })
        }
        L1Method::ClassNumberFormula => {
            if !arith::is_fundamental_discriminant(disc) {
                return Err(Error::Unsupported(format!(
                    "class number formula needs a fundamental discriminant, got {disc}"
                )));
            }
            let rec = ClassNumberRecord::compute(disc)?;
            let value = 2.0 * std::f64::consts::PI * rec.h as f64
                / (rec.w_d as f64 * (disc.unsigned_abs() as f64).sqrt());
            Ok(L1Value {
                disc,
                method,
                value,
                tail_bound: 0.0,
            })
        }
    }
}

/// One JSON-lines report record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
}

impl CheckRecord {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenforms::{catalog_spec, EigenformEntry};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn entry(label: &str, depth: usize) -> EigenformEntry {
        EigenformEntry::expand(label, catalog_spec(label).unwrap(), depth).unwrap()
    }

    #[test]
    fn local_g_inert_prime() {
        let (p, l, s) = (3u64, 0.7, c(1.5));
        let x = (3f64).powf(-1.5);
        let expect = (1.0 - l * x + x * x) * (1.0 + l * x + x * x);
        let got = local_g(p, -1, l, false, s).unwrap();
        assert!((got.re - expect).abs() < 1e-14 && got.im.abs() < 1e-15);
    }

    #[test]
    fn local_g_level_prime() {
        let (l, x) = (-0.3, 1.0 / 4.0);
        let got = local_g(2, 1, l, true, c(2.0)).unwrap();
        let expect = (1.0 - l * x) * (1.0 - l * x);
        assert!((got.re - expect).abs() < 1e-15);
    }

    #[test]
    fn local_g_rejects_left_half_plane() {
        assert!(matches!(
            local_g(5, 1, 0.1, false, c(0.5)),
            Err(Error::OutsideConvergence { .. })
        ));
    }

    #[test]
    fn display_matches_definition_at_split_prime() {
        let e = entry("delta", 10);
        let l = e.lambda(5).unwrap();
        assert_eq!(qforms::chi_d(-4, 5), 1);
        let def = local_g(5, 1, l, false, c(2.0)).unwrap();
        let disp = displayed_g(5, 1, l, false, c(2.0)).unwrap();
        assert!((def - disp).norm() < 1e-12);
    }

    #[test]
    fn display_differs_only_at_ramified_primes() {
        let e = entry("delta", 200);
        let bad = g_display_discrepancies(&e, -4, 199, 2.0, 1e-12).unwrap();
        assert_eq!(bad.iter().map(|d| d.p).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn series_inverse_of_geometric() {
        let inv = series_inverse(&[1.0, -1.0], 5);
        assert_eq!(inv, vec![1.0; 6]);
    }

    #[test]
    fn identity_check_delta() {
        let e = entry("delta", 2000);
        let dev = coefficient_identity_check(&e, -4, 2000).unwrap();
        assert!(dev < 1e-9, "{dev}");
    }

    #[test]
    fn identity_kills_squares() {
        let e = entry("d11k2", 100);
        let chi = KroneckerCharacter::new(-7).unwrap();
        let lambdas = e.lambdas();
        let lhs = merge_dirichlet(100, |p, deg| {
            let l = lambdas[p as usize];
            let c = chi.eval(p);
            let in_level = p == 11;
            let lf = series_inverse(&hecke_local_inverse(l, in_level), deg);
            let lt = series_inverse(&twisted_local_inverse(l, c, in_level), deg);
            poly_mul(&poly_mul(&lf, &lt, Some(deg)), &local_g_poly(c, l, in_level), Some(deg))
        });
        assert!((lhs[1] - 1.0).abs() < 1e-15);
        for n in [4usize, 9, 25, 49] {
            assert!(lhs[n].abs() < 1e-12, "n = {n}: {}", lhs[n]);
        }
    }

    #[test]
    fn d_series_examples() {
        assert!(d_series_check(1, -3, 2, 2000).unwrap() < 1e-9);
        let lhs = merge_dirichlet(10, |p, e| {
            let c = qforms::chi_d(-4, p);
            let z = series_inverse(&poly_pow(&[1.0, -1.0], 2, e), e);
            let l = series_inverse(&poly_pow(&[1.0, -(c as f64)], 2, e), e);
            poly_mul(&poly_mul(&z, &l, Some(e)), &p_local_poly(c, 2, false), Some(e))
        });
        assert!((lhs[5] - 4.0).abs() < 1e-12);
        assert!((lhs[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn check_lengths_are_bounded() {
        assert!(d_series_check(1, -4, 1, MAX_CHECK_LENGTH + 1).is_err());
        assert!(d_series_check(1, -23, 1, 10).is_err());
    }

    #[test]
    fn p_local_factor_inert_prime() {
        let poly = p_local_poly(-1, 1, false);
        assert_eq!(poly, vec![1.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn p_euler_tail_shrinks() {
        let a = p_euler(c(1.0), -4, 1, 1, 1_000).unwrap();
        let b = p_euler(c(1.0), -4, 1, 1, 10_000).unwrap();
        assert!(b.tail_bound < a.tail_bound);
        assert!((a.value - b.value).norm() <= a.tail_bound);
        assert!(b.value.re > b.tail_bound);
    }

    #[test]
    fn p_euler_rejects_left_half_plane() {
        assert!(p_euler(c(0.4), -4, 1, 1, 100).is_err());
    }

    #[test]
    fn class_number_formula_values() {
        let pi = std::f64::consts::PI;
        let v = l1_chi(-4, L1Method::ClassNumberFormula).unwrap().value;
        assert!((v - pi / 4.0).abs() < 1e-15);
        let v = l1_chi(-3, L1Method::ClassNumberFormula).unwrap().value;
        assert!((v - 0.604_599_788_078_072_6).abs() < 1e-12);
        let v = l1_chi(-163, L1Method::ClassNumberFormula).unwrap().value;
        assert!((v - pi / 163f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            l1_chi(-12, L1Method::ClassNumberFormula),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn record_keys_are_sorted() {
        let r = CheckRecord {
            check: "d_series".into(),
            params: serde_json::json!({"eta": 2, "disc": -4}),
            deviation: Some(0.0),
            value: None,
            tail_bound: None,
        };
        assert_eq!(
            r.to_json_line().unwrap(),
            r#"{"check":"d_series","params":{"disc":-4,"eta":2},"deviation":0.0}"#
        );
    }
}

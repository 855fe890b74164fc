//! The step kernel `alpha`, the multiplicative minorant `h_Y`, the delay
//! equation `u sigma(u) = int_0^u sigma(t) alpha(u - t) dt` and the search
//! for the first negative eigenvalue at an integer represented by a form.
//!
//! Both `sigma` solvers work on a uniform grid with `sigma` linear between
//! nodes and integrate the kernel exactly over each cell. Exact cell
//! integrals come from prefix tables of `int alpha`, `int t alpha` and
//! `int beta / t` (with `beta = 2 - alpha`) stored at the breakpoints `1/m`
//! for `m <= KERNEL_TABLE_SIZE`. Below `1/KERNEL_TABLE_SIZE` the kernel is
//! replaced by `alpha(t) ~ 2 - pi^2 t^2`; the induced error in any of the
//! three integrals is below `1e-13`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::eigenforms::EigenformEntry;
use crate::qforms::{self, QuadForm};
use crate::sieves::{CoefficientTable, SpfSieve};
use crate::summation::KahanSum;
use crate::{Error, Result};

pub const KERNEL_TABLE_SIZE: usize = 1 << 16;

/// Coarsest grid step accepted by [`sigma_march`].
pub const MAX_SIGMA_STEP: f64 = 1e-3;

/// Largest `u` accepted by the `sigma` solvers.
pub const MAX_SIGMA_U: f64 = 2.0;

/// Largest number of series terms accepted by [`sigma_series`].
pub const MAX_SERIES_TERMS: usize = 40;

/// Values below this count as negative in [`first_sign_change`].
pub const NEGATIVITY_THRESHOLD: f64 = -1e-12;

/// The step function `alpha` with its prefix integrals.
#[derive(Clone, Debug)]
pub struct StepKernel {
    alpha0: f64,
    // index m holds the integral over [0, 1/m], m = 1..=KERNEL_TABLE_SIZE
    int_alpha: Vec<f64>,
    int_t_alpha: Vec<f64>,
    int_beta_over_t: Vec<f64>,
}

impl Default for StepKernel {
    fn default() -> Self {
        Self::new()
    }
}

/// `m` with `t` in `(1/(m+1), 1/m]`, for `0 < t <= 1`.
fn step_index(t: f64) -> u64 {
    let mut m = (1.0 / t).floor().max(1.0) as u64;
    while m > 1 && t > 1.0 / m as f64 {
        m -= 1;
    }
    while t <= 1.0 / (m + 1) as f64 {
        m += 1;
    }
    m
}

#[inline]
fn step_value(m: u64) -> f64 {
    2.0 * (PI / (m + 1) as f64).cos()
}

impl StepKernel {
    pub fn new() -> Self {
        let size = KERNEL_TABLE_SIZE;
        let mut int_alpha = vec![0.0; size + 1];
        let mut int_t_alpha = vec![0.0; size + 1];
        let mut int_beta_over_t = vec![0.0; size + 1];
        let x = 1.0 / size as f64;
        int_alpha[size] = tail_int_alpha(x);
        int_t_alpha[size] = tail_int_t_alpha(x);
        int_beta_over_t[size] = tail_int_beta_over_t(x);
        for m in (1..size).rev() {
            let (a, b) = (1.0 / (m + 1) as f64, 1.0 / m as f64);
            let v = step_value(m as u64);
            int_alpha[m] = int_alpha[m + 1] + v * (b - a);
            int_t_alpha[m] = int_t_alpha[m + 1] + v * (b * b - a * a) / 2.0;
            int_beta_over_t[m] = int_beta_over_t[m + 1] + (2.0 - v) * (b / a).ln();
        }
        StepKernel {
            alpha0: 2.0,
            int_alpha,
            int_t_alpha,
            int_beta_over_t,
        }
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// `alpha(t)`, right-closed steps on `(0, 1]` and `-2` beyond 1.
    pub fn alpha(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("alpha is defined for t >= 0, got {t}")));
        }
        Ok(if t == 0.0 {
            self.alpha0
        } else if t > 1.0 {
            -2.0
        } else {
            step_value(step_index(t))
        })
    }

    /// Returns `(int_0^x alpha, int_0^x t alpha, int_0^x (2 - alpha)/t)`.
    pub fn prefix(&self, x: f64) -> (f64, f64, f64) {
        if x <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        if x > 1.0 {
            let (a, b, c) = (self.int_alpha[1], self.int_t_alpha[1], self.int_beta_over_t[1]);
            return (a - 2.0 * (x - 1.0), b - (x * x - 1.0), c + 4.0 * x.ln());
        }
        let m = step_index(x) as usize;
        if m >= KERNEL_TABLE_SIZE {
            return (tail_int_alpha(x), tail_int_t_alpha(x), tail_int_beta_over_t(x));
        }
        let a = 1.0 / (m + 1) as f64;
        let v = step_value(m as u64);
        (
            self.int_alpha[m + 1] + v * (x - a),
            self.int_t_alpha[m + 1] + v * (x * x - a * a) / 2.0,
            self.int_beta_over_t[m + 1] + (2.0 - v) * (x / a).ln(),
        )
    }
}

fn tail_int_alpha(x: f64) -> f64 {
    2.0 * x - PI * PI * x.powi(3) / 3.0
}

fn tail_int_t_alpha(x: f64) -> f64 {
    x * x - PI * PI * x.powi(4) / 4.0
}

fn tail_int_beta_over_t(x: f64) -> f64 {
    PI * PI * x * x / 2.0
}

/// `h_Y(n)` for squarefree `n`.
pub fn h_y(n: u64, y: f64, level: u64, kernel: &StepKernel) -> Result<f64> {
    if n == 0 || !arith::is_squarefree(n) {
        return Err(Error::Domain(format!("h_Y is supported on squarefree n, got {n}")));
    }
    arith::factorize(n)
        .into_iter()
        .map(|(p, _)| h_y_prime(p, y, level, kernel))
        .product()
}

fn h_y_prime(p: u64, y: f64, level: u64, kernel: &StepKernel) -> Result<f64> {
    if y <= 1.0 {
        return Err(Error::Domain(format!("Y must exceed 1, got {y}")));
    }
    if level.is_multiple_of(p) {
        Ok(0.0)
    } else if p as f64 > y {
        Ok(-2.0)
    } else {
        kernel.alpha((p as f64).ln() / y.ln())
    }
}

/// `sum_{n <= x_limit} h_Y(n) r*(n)` over squarefree `n` coprime to the
/// level of the table.
pub fn minorant_sum_upto(table: &CoefficientTable, y: f64, x_limit: u64, kernel: &StepKernel) -> Result<f64> {
    table.check_range(x_limit)?;
    let x = x_limit as usize;
    let sieve = SpfSieve::new(x);
    let level = table.level();
    let mut h = vec![0.0f64; x + 1];
    if x >= 1 {
        h[1] = 1.0;
    }
    let mut sum = KahanSum::new();
    if x >= 1 {
        sum.add(table.r_star(1) as f64);
    }
    for n in 2..=x {
        if !table.in_support(n) {
            continue;
        }
        let p = sieve.spf(n) as usize;
        let hp = if p == n {
            h_y_prime(p as u64, y, level, kernel)?
        } else {
            h[p]
        };
        h[n] = hp * h[n / p];
        let r = table.r_star(n);
        if r != 0 && h[n] != 0.0 {
            sum.add(h[n] * r as f64);
        }
    }
    Ok(sum.value())
}

/// `sum_{n <= Y^u} h_Y(n) r*(n)`. `Y^u` is rounded to the nearest integer
/// when it lies within `1e-9` of one.
pub fn minorant_sum(table: &CoefficientTable, y: f64, u: f64, kernel: &StepKernel) -> Result<f64> {
    let x = y.powf(u);
    let near = x.round();
    let x = if (x - near).abs() <= 1e-9 * near.max(1.0) { near } else { x.floor() };
    minorant_sum_upto(table, y, x as u64, kernel)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMethod {
    March,
    Series,
}

/// How the march is started.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "until")]
pub enum InitialSegment {
    /// Solve the equation on all of `(0, u_max]`, starting from
    /// `sigma(u) ~ u` as `u -> 0`.
    Equation,
    /// Prescribe `sigma(u) = u` on `(0, x1]` and solve only beyond `x1`.
    Prescribed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSolution {
    pub method: SigmaMethod,
    pub initial: InitialSegment,
    pub step: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SigmaSolution {
    /// Linear interpolation on the grid.
    pub fn value_at(&self, u: f64) -> Result<f64> {
        let last = *self.grid.last().unwrap();
        if !(0.0..=last * (1.0 + 1e-12)).contains(&u) {
            return Err(Error::Range {
                index: (u * 1e6) as u64,
                limit: (last * 1e6) as u64,
            });
        }
        let pos = (u / self.step).min((self.grid.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let w = pos - i as f64;
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    /// Largest difference between neighbouring grid values.
    pub fn max_jump(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,sigma\n");
        for (u, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{u},{v}\n"));
        }
        out
    }
}

fn grid(u_max: f64, step: f64) -> Result<(usize, f64)> {
    if !(u_max > 0.0 && u_max <= MAX_SIGMA_U) {
        return Err(Error::Domain(format!(
            "u_max must lie in (0, {MAX_SIGMA_U}], got {u_max}"
        )));
    }
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let n = (u_max / step).ceil().max(2.0) as usize;
    Ok((n, u_max / n as f64))
}

/// March the delay equation over a uniform grid ending exactly at `u_max`.
///
/// With `sigma` linear on each cell, the cell integrals against
/// `alpha(u_k - t)` reduce to differences of the kernel prefix integrals at
/// grid points, so each step solves one linear equation for `sigma(u_k)`.
pub fn sigma_march(kernel: &StepKernel, u_max: f64, step: f64, initial: InitialSegment) -> Result<SigmaSolution> {
    if step > MAX_SIGMA_STEP {
        return Err(Error::Resolution(format!(
            "step {step} is coarser than {MAX_SIGMA_STEP}"
        )));
    }
    let (n, h) = grid(u_max, step)?;
    let u: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    // weights for sigma at the left / right end of a cell whose distance
    // from u_k spans [u_{d-1}, u_d]
    let prefix: Vec<(f64, f64, f64)> = u.iter().map(|&x| kernel.prefix(x)).collect();
    let mut w_left = vec![0.0; n + 1];
    let mut w_right = vec![0.0; n + 1];
    for d in 1..=n {
        let j0 = prefix[d].0 - prefix[d - 1].0;
        let j1 = prefix[d].1 - prefix[d - 1].1;
        w_left[d] = (j1 - u[d - 1] * j0) / h;
        w_right[d] = (u[d] * j0 - j1) / h;
    }
    let mut s = vec![0.0; n + 1];
    let start = match initial {
        InitialSegment::Equation => {
            s[1] = h;
            2
        }
        InitialSegment::Prescribed(x1) => {
            if !(x1 > 0.0 && x1 <= u_max) {
                return Err(Error::Domain(format!("initial segment end {x1} outside (0, u_max]")));
            }
            let k1 = (x1 / h).round() as usize;
            s[1..=k1].copy_from_slice(&u[1..=k1]);
            k1 + 1
        }
    };
    for k in start..=n {
        let mut acc = KahanSum::new();
        for i in 0..k {
            let d = k - i;
            acc.add(s[i] * w_left[d]);
            if i + 1 < k {
                acc.add(s[i + 1] * w_right[d]);
            }
        }
        s[k] = acc.value() / (u[k] - w_right[1]);
    }
    Ok(SigmaSolution {
        method: SigmaMethod::March,
        initial,
        step: h,
        grid: u,
        values: s,
    })
}

/// Grid values of `sum_{j <= j_max} (-1)^j / j! I_j` on `[0, u_max]`.
///
/// `I_j = K_j` where `K_0(v) = v` and
/// `K_j(v) = int_0^v K_{j-1}(v - t) (2 - alpha(t)) / t dt`.
pub fn sigma_series_grid(kernel: &StepKernel, u_max: f64, j_max: usize, step: f64) -> Result<SigmaSolution> {
    if j_max > MAX_SERIES_TERMS {
        return Err(Error::Domain(format!(
            "j_max = {j_max} exceeds {MAX_SERIES_TERMS}"
        )));
    }
    let (n, h) = grid(u_max, step)?;
    let u: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let prefix: Vec<(f64, f64, f64)> = u.iter().map(|&x| kernel.prefix(x)).collect();
    // moments of beta/t over cell l = [u_l, u_{l+1}]: p0 = int beta/t and
    // p1 = int (t - u_l) beta/t
    let mut p0 = vec![0.0; n];
    let mut p1 = vec![0.0; n];
    for l in 0..n {
        p0[l] = prefix[l + 1].2 - prefix[l].2;
        let int_beta = 2.0 * h - (prefix[l + 1].0 - prefix[l].0);
        p1[l] = int_beta - u[l] * p0[l];
    }
    let mut k_prev = u.clone();
    let mut total: Vec<KahanSum> = u
        .iter()
        .map(|&x| {
            let mut s = KahanSum::new();
            s.add(x);
            s
        })
        .collect();
    let mut coeff = 1.0;
    for j in 1..=j_max {
        coeff *= -1.0 / j as f64;
        let mut k_next = vec![0.0; n + 1];
        for k in 1..=n {
            let mut acc = KahanSum::new();
            for l in 0..k {
                let (a, b) = (k_prev[k - l], k_prev[k - l - 1]);
                acc.add(a * p0[l] + (b - a) / h * p1[l]);
            }
            k_next[k] = acc.value();
        }
        for (t, v) in total.iter_mut().zip(&k_next) {
            t.add(coeff * v);
        }
        k_prev = k_next;
    }
    Ok(SigmaSolution {
        method: SigmaMethod::Series,
        initial: InitialSegment::Equation,
        step: h,
        grid: u,
        values: total.iter().map(KahanSum::value).collect(),
    })
}

/// Default grid step of [`sigma_series`].
pub const SERIES_STEP: f64 = 1e-3;

/// Truncated series for `sigma(u)`.
pub fn sigma_series(kernel: &StepKernel, u: f64, j_max: usize) -> Result<f64> {
    let sol = sigma_series_grid(kernel, u, j_max, SERIES_STEP)?;
    Ok(*sol.values.last().unwrap())
}

/// Checks over a theta grid on `(0, pi)` that nonnegativity of
/// `sin((j+1) theta) / sin theta` for `j = 1..=m` forces
/// `2 cos theta >= 2 cos(pi / (m + 1))`, up to the grid tolerance.
pub fn satake_step_property(m: u32, resolution: f64) -> Result<bool> {
    if m == 0 || m > 20 {
        return Err(Error::Domain(format!("m = {m} must lie in 1..=20")));
    }
    if !(resolution > 0.0 && resolution < 1.0) {
        return Err(Error::Domain(format!("bad grid resolution {resolution}")));
    }
    let bound = 2.0 * (PI / (m + 1) as f64).cos();
    let tol = 2.0 * resolution;
    let count = (PI / resolution).floor() as usize;
    for i in 1..count {
        let theta = i as f64 * resolution;
        if satake_hypothesis(m, theta) && 2.0 * theta.cos() < bound - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `lambda(p^j) >= 0` for `j = 1..=m` when `lambda(p) = 2 cos theta`.
pub fn satake_hypothesis(m: u32, theta: f64) -> bool {
    let s = theta.sin();
    (1..=m).all(|j| ((j + 1) as f64 * theta).sin() / s >= -1e-12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GConvolutionReport {
    pub y: f64,
    /// Whether the form itself satisfies `lambda(m) >= 0` at every
    /// represented squarefree `m <= Y` coprime to the level.
    pub hypothesis_holds: bool,
    /// Angle of the synthetic eigenvalues, when they replaced the form.
    pub synthetic_theta: Option<f64>,
    pub primes_checked: usize,
    /// Primes with `g(p) < 0`.
    pub negative_g: Vec<u64>,
    /// `(X, sum lambda*, sum h*)` at dyadic checkpoints.
    pub partial_sums: Vec<(u64, f64, f64)>,
    pub sums_ordered: bool,
}

impl GConvolutionReport {
    pub fn passed(&self) -> bool {
        self.negative_g.is_empty() && self.sums_ordered
    }
}

/// Synthetic eigenvalues `lambda(p) = 2 cos theta_p` on squarefree `n`,
/// with `theta_p = min(theta, pi / (m_p + 1))` and `m_p` the largest power
/// of `p` not exceeding `Y`, so that `lambda(p^j) >= 0` for `p^j <= Y`.
pub fn synthetic_lambda(x_max: usize, y: f64, theta: f64) -> Vec<f64> {
    let sieve = SpfSieve::new(x_max);
    let mut lambda = vec![0.0; x_max + 1];
    if x_max >= 1 {
        lambda[1] = 1.0;
    }
    for n in 2..=x_max {
        let p = sieve.spf(n) as usize;
        let m = n / p;
        if m.is_multiple_of(p) {
            continue;
        }
        lambda[n] = if m == 1 {
            let mp = ((y.ln() / (p as f64).ln()) + 1e-12).floor().max(0.0);
            2.0 * theta.min(PI / (mp + 1.0)).cos()
        } else {
            lambda[p] * lambda[m]
        };
    }
    lambda
}

/// Checks the prime-level inequality `g(p) >= 0` and the summed
/// inequality `sum lambda* >= sum h*` over the table range.
pub fn g_convolution_check(table: &CoefficientTable, y: f64, kernel: &StepKernel) -> Result<GConvolutionReport> {
    let x = table.x_max();
    let level = table.level();
    let y_lim = (y.floor() as usize).min(x);
    let hypothesis_holds = (1..=y_lim)
        .filter(|&n| table.in_support(n) && table.r_star(n) > 0)
        .all(|n| table.lambda(n) >= 0.0);
    let synthetic_theta = (!hypothesis_holds).then_some(PI / 4.0);
    let synth;
    let lambda: &dyn Fn(usize) -> f64 = match synthetic_theta {
        None => &|n| table.lambda(n),
        Some(theta) => {
            synth = synthetic_lambda(x, y, theta);
            &|n| synth[n]
        }
    };

    let primes = arith::primes_up_to(x as u64);
    let mut negative_g = Vec::new();
    for &p in &primes {
        if level.is_multiple_of(p) {
            continue;
        }
        let r = table.r_star(p as usize) as f64;
        let g = (lambda(p as usize) - h_y_prime(p, y, level, kernel)?) * r;
        if g < -1e-12 {
            negative_g.push(p);
        }
    }

    let sieve = SpfSieve::new(x);
    let mut h = vec![0.0f64; x + 1];
    let (mut sl, mut sh) = (KahanSum::new(), KahanSum::new());
    let checkpoints = crate::moments::dyadic_checkpoints(1, x as u64);
    let mut partial_sums = Vec::new();
    let mut next = 0;
    for n in 1..=x {
        if table.in_support(n) {
            h[n] = if n == 1 {
                1.0
            } else {
                let p = sieve.spf(n) as usize;
                let hp = if p == n { h_y_prime(p as u64, y, level, kernel)? } else { h[p] };
                hp * h[n / p]
            };
            let r = table.r_star(n) as f64;
            sl.add(lambda(n) * r);
            sh.add(h[n] * r);
        }
        if next < checkpoints.len() && n as u64 == checkpoints[next] {
            partial_sums.push((n as u64, sl.value(), sh.value()));
            next += 1;
        }
    }
    let sums_ordered = partial_sums.iter().all(|&(_, a, b)| a >= b - 1e-9);
    Ok(GConvolutionReport {
        y,
        hypothesis_holds,
        synthetic_theta,
        primes_checked: primes.len(),
        negative_g,
        partial_sums,
        sums_ordered,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignChangeRecord {
    pub label: String,
    pub level: u64,
    pub weight: u32,
    pub disc: i64,
    pub form: QuadForm,
    pub n_first: u64,
    pub witness: (i64, i64),
    pub a_value: i128,
    pub lambda_value: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SignChangeOutcome {
    Found(SignChangeRecord),
    NotFound {
        label: String,
        disc: i64,
        scan_bound: u64,
    },
}

impl SignChangeOutcome {
    pub fn record(&self) -> Option<&SignChangeRecord> {
        match self {
            SignChangeOutcome::Found(r) => Some(r),
            SignChangeOutcome::NotFound { .. } => None,
        }
    }
}

/// `(N k^2 |D|^2)^{3/4}`.
pub fn sign_change_bound(level: u64, weight: u32, disc: i64) -> f64 {
    let d = disc.unsigned_abs() as f64;
    (level as f64 * (weight as f64).powi(2) * d * d).powf(0.75)
}

fn is_negative(lambda: f64, a: i128) -> bool {
    if lambda < NEGATIVITY_THRESHOLD {
        true
    } else if lambda.abs() <= -NEGATIVITY_THRESHOLD {
        a < 0
    } else {
        false
    }
}

/// Which integers the sign-change scan runs over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanScope {
    /// Every positive integer coprime to the level.
    #[default]
    AllIntegers,
    /// Squarefree integers coprime to the level only.
    Squarefree,
}

/// Least `n <= x_max`, coprime to the level and represented by the form,
/// with a negative eigenvalue.
pub fn first_sign_change(table: &CoefficientTable, entry: &EigenformEntry) -> Result<SignChangeOutcome> {
    first_sign_change_in(table, entry, ScanScope::AllIntegers)
}

pub fn first_sign_change_in(
    table: &CoefficientTable,
    entry: &EigenformEntry,
    scope: ScanScope,
) -> Result<SignChangeOutcome> {
    if entry.label != table.meta.label || entry.depth() < table.x_max() {
        return Err(Error::Domain(format!(
            "table for {} does not match the entry {}",
            table.meta.label, entry.label
        )));
    }
    let disc = table.disc();
    let form = qforms::class_one_form(disc)?;
    let coeffs = entry.coefficients();
    // r* > 0 is necessary and sufficient for fundamental D only; otherwise
    // the lattice decides.
    let fundamental = arith::is_fundamental_discriminant(disc);
    for n in 1..=table.x_max() {
        if !table.coprime_to_level(n) || (fundamental && table.r_star(n) == 0) {
            continue;
        }
        if scope == ScanScope::Squarefree && !table.mu_sq(n) {
            continue;
        }
        if !is_negative(table.lambda(n), coeffs[n]) {
            continue;
        }
        let Some(witness) = qforms::find_representation(&form, n as u64) else {
            if fundamental {
                return Err(Error::Domain(format!(
                    "r*({n}) > 0 but no representation by {form} found"
                )));
            }
            continue;
        };
        let bound = sign_change_bound(table.level(), table.meta.weight, disc);
        return Ok(SignChangeOutcome::Found(SignChangeRecord {
            label: entry.label.clone(),
            level: table.level(),
            weight: table.meta.weight,
            disc,
            form,
            n_first: n as u64,
            witness,
            a_value: coeffs[n],
            lambda_value: table.lambda(n),
            bound,
            ratio: n as f64 / bound,
        }));
    }
    Ok(SignChangeOutcome::NotFound {
        label: entry.label.clone(),
        disc,
        scan_bound: table.x_max() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenforms::catalog_spec;
    use crate::sieves::build_table;

    fn entry(label: &str, depth: usize) -> EigenformEntry {
        EigenformEntry::expand(label, catalog_spec(label).unwrap(), depth).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let k = StepKernel::new();
        assert_eq!(k.alpha(0.0).unwrap(), 2.0);
        assert!(k.alpha(0.75).unwrap().abs() < 1e-15);
        assert!((k.alpha(0.4).unwrap() - 1.0).abs() < 1e-15);
        assert!(k.alpha(1.0).unwrap().abs() < 1e-15);
        assert_eq!(k.alpha(1.5).unwrap(), -2.0);
        assert!(k.alpha(-0.1).is_err());
        // right-closed: 1/2 belongs to (1/3, 1/2]
        assert!((k.alpha(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((k.alpha(1.0 / 3.0).unwrap() - 2.0 * (PI / 4.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn kernel_prefix_matches_quadrature() {
        let k = StepKernel::new();
        for &x in &[0.013, 0.2, 0.5, 0.77, 1.0, 1.3] {
            let n = 400_000;
            let (mut a, mut b) = (0.0, 0.0);
            for i in 0..n {
                let t = (i as f64 + 0.5) * x / n as f64;
                let v = k.alpha(t).unwrap();
                a += v * x / n as f64;
                b += t * v * x / n as f64;
            }
            let (pa, pb, _) = k.prefix(x);
            assert!((pa - a).abs() < 1e-4, "x = {x}: {pa} vs {a}");
            assert!((pb - b).abs() < 1e-4);
        }
    }

    #[test]
    fn h_y_examples() {
        let k = StepKernel::new();
        assert_eq!(h_y(1, 100.0, 1, &k).unwrap(), 1.0);
        assert!(h_y(97, 97.0, 1, &k).unwrap().abs() < 1e-15);
        assert_eq!(h_y(2 * 11, 100.0, 11, &k).unwrap(), 0.0);
        assert_eq!(h_y(101, 100.0, 1, &k).unwrap(), -2.0);
        assert!(h_y(12, 100.0, 1, &k).is_err());
    }

    #[test]
    fn minorant_matches_pointwise() {
        let k = StepKernel::new();
        let e = entry("delta", 100);
        let t = build_table(&e, -4, 100).unwrap();
        let brute: f64 = (1..=100u64)
            .filter(|&n| arith::is_squarefree(n))
            .map(|n| h_y(n, 100.0, 1, &k).unwrap() * qforms::r_star(n, -4) as f64)
            .sum();
        let got = minorant_sum(&t, 100.0, 1.0, &k).unwrap();
        assert!((got - brute).abs() < 1e-12);
        assert_eq!(minorant_sum(&t, 100.0, 0.1, &k).unwrap(), 1.0);
    }

    #[test]
    fn march_initial_values() {
        let k = StepKernel::new();
        let s = sigma_march(&k, 1.2, 1e-3, InitialSegment::Prescribed(1.0)).unwrap();
        assert!((s.value_at(0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((s.value_at(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            sigma_march(&k, 1.2, 2e-3, InitialSegment::Equation),
            Err(Error::Resolution(_))
        ));
        assert!(sigma_march(&k, 2.5, 1e-3, InitialSegment::Equation).is_err());
    }

    #[test]
    fn march_starts_like_u() {
        // alpha(t) = 2 - O(t^2) near 0, so sigma(u) = u + O(u^3)
        let k = StepKernel::new();
        let s = sigma_march(&k, 0.01, 1e-4, InitialSegment::Equation).unwrap();
        for (u, v) in s.grid.iter().zip(&s.values).skip(1) {
            assert!((v / u - 1.0).abs() < 1e-3, "u = {u}: {v}");
        }
    }

    #[test]
    fn series_first_term_closed_form() {
        let k = StepKernel::new();
        let u = 1.2f64;
        // I_1(u) = sum over steps of beta_m int (u - t)/t dt on (1/(m+1), 1/m]
        let mut oracle = 4.0 * (u * u.ln() - (u - 1.0));
        for m in 1..200_000u64 {
            let (a, b) = (1.0 / (m + 1) as f64, 1.0 / m as f64);
            let beta = 2.0 - 2.0 * (PI / (m + 1) as f64).cos();
            oracle += beta * (u * (b / a).ln() - (b - a));
        }
        let sol = sigma_series_grid(&k, u, 1, 1e-3).unwrap();
        let i1 = u - sol.values.last().unwrap();
        assert!((i1 - oracle).abs() < 1e-6, "{i1} vs {oracle}");
    }

    #[test]
    fn satake_examples() {
        assert!(satake_step_property(1, 1e-4).unwrap());
        assert!(satake_hypothesis(2, PI / 3.0));
        assert!(satake_step_property(5, 1e-5).unwrap());
        assert!(satake_step_property(21, 1e-3).is_err());
    }

    #[test]
    fn sign_change_delta() {
        let e = entry("delta", 200);
        let t = build_table(&e, -4, 200).unwrap();
        let rec = first_sign_change(&t, &e).unwrap();
        let rec = rec.record().unwrap();
        assert_eq!(rec.n_first, 2);
        assert_eq!(rec.a_value, -24);
        assert_eq!(rec.form.eval(rec.witness.0, rec.witness.1), 2);
        assert!(rec.ratio <= 1.0);

        // 4 = 2^2 is represented by x^2 + xy + y^2 and tau(4) = -1472
        let t = build_table(&e, -3, 200).unwrap();
        let rec = first_sign_change(&t, &e).unwrap();
        assert_eq!(rec.record().unwrap().n_first, 4);
        let rec = first_sign_change_in(&t, &e, ScanScope::Squarefree).unwrap();
        assert_eq!(rec.record().unwrap().n_first, 7);
    }

    #[test]
    fn sign_change_not_found() {
        let e = entry("delta", 3);
        let t = build_table(&e, -3, 3).unwrap();
        assert!(matches!(
            first_sign_change(&t, &e).unwrap(),
            SignChangeOutcome::NotFound { scan_bound: 3, .. }
        ));
    }

    #[test]
    fn g_convolution_prime_cases() {
        let k = StepKernel::new();
        let e = entry("delta", 4000);
        let t = build_table(&e, -4, 4000).unwrap();
        let r = g_convolution_check(&t, 1000.0, &k).unwrap();
        assert!(!r.hypothesis_holds);
        assert_eq!(r.synthetic_theta, Some(PI / 4.0));
        assert!(r.negative_g.is_empty(), "{:?}", r.negative_g);
    }
}

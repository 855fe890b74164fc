//! Checkpointed summatory functions over squarefree integers coprime to the
//! level, their main terms, and log-log slope fits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{self, gcd};
use crate::dirichlet::{self, L1Method};
use crate::eigenforms::EigenformEntry;
use crate::qforms::{self, ClassNumberRecord};
use crate::sieves::CoefficientTable;
use crate::summation::KahanSum;
use crate::{Error, Result};

/// Smallest number of usable points accepted by [`fit_slope`].
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumParams {
    pub label: String,
    pub level: u64,
    pub weight: u32,
    pub disc: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub x: u64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumReport {
    pub params: SumParams,
    pub w_d: u32,
    pub checkpoints: Vec<Checkpoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub main_term: Option<Vec<Checkpoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_constant: Option<f64>,
}

impl SumReport {
    pub fn value_at(&self, x: u64) -> Option<f64> {
        self.checkpoints.iter().find(|c| c.x == x).map(|c| c.value)
    }

    /// `|S*(X)| X^{-1/2} / (N k^2 |D|)^{1/2}` per checkpoint.
    pub fn level_constants(&self) -> Vec<f64> {
        let p = &self.params;
        let conductor = (p.level as f64) * (p.weight as f64).powi(2) * p.disc.unsigned_abs() as f64;
        self.checkpoints
            .iter()
            .map(|c| c.value.abs() / (c.x as f64).sqrt() / conductor.sqrt())
            .collect()
    }

    /// Fill in the slope over all checkpoints and the largest level constant.
    pub fn with_fit(mut self) -> Result<Self> {
        self.fitted_slope = Some(fit_slope(&self.checkpoints)?);
        self.bound_constant = self.level_constants().into_iter().reduce(f64::max);
        Ok(self)
    }

    /// CSV with header `X,S_star,w_D_S,main_term,ratio`; the last two
    /// columns are empty when no main term is attached.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("X,S_star,w_D_S,main_term,ratio\n");
        for (i, c) in self.checkpoints.iter().enumerate() {
            let scaled = self.w_d as f64 * c.value;
            match self.main_term.as_ref().map(|m| m[i].value) {
                Some(m) => out.push_str(&format!("{},{},{},{},{}\n", c.x, c.value, scaled, m, c.value / m)),
                None => out.push_str(&format!("{},{},{},,\n", c.x, c.value, scaled)),
            }
        }
        out
    }
}

/// Powers of two from `2^lo_exp` up to `x_max`.
pub fn dyadic_checkpoints(lo_exp: u32, x_max: u64) -> Vec<u64> {
    (lo_exp..64)
        .map(|e| 1u64 << e)
        .take_while(|&x| x <= x_max)
        .collect()
}

fn check_checkpoints(table: &CoefficientTable, checkpoints: &[u64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Domain("no checkpoints given".into()));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    table.check_range(*checkpoints.last().unwrap())
}

fn accumulate<F>(table: &CoefficientTable, checkpoints: &[u64], weight: F) -> Vec<Checkpoint>
where
    F: Fn(usize) -> f64,
{
    let mut sum = KahanSum::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let last = *checkpoints.last().unwrap() as usize;
    for n in 1..=last {
        if table.in_support(n) {
            let r = table.r_star(n);
            if r != 0 {
                sum.add(weight(n) * r as f64);
            }
        }
        if n as u64 == checkpoints[next] {
            out.push(Checkpoint {
                x: n as u64,
                value: sum.value(),
            });
            next += 1;
        }
    }
    out
}

fn params_of(table: &CoefficientTable, eta: Option<u32>) -> SumParams {
    SumParams {
        label: table.meta.label.clone(),
        level: table.meta.level,
        weight: table.meta.weight,
        disc: table.meta.disc,
        eta,
    }
}

/// `S*(X) = sum_{n <= X} mu^2(n) [gcd(n, N) = 1] lambda(n) r*(n)`.
pub fn sum_s(table: &CoefficientTable, checkpoints: &[u64]) -> Result<SumReport> {
    check_checkpoints(table, checkpoints)?;
    let w_d = qforms::unit_count(table.disc());
    Ok(SumReport {
        params: params_of(table, None),
        w_d,
        checkpoints: accumulate(table, checkpoints, |n| table.lambda(n)),
        main_term: None,
        fitted_slope: None,
        bound_constant: None,
    })
}

/// `E_eta(X) = sum_{n <= X} mu^2(n) [gcd(n, N) = 1] eta^omega(n) r*(n)`.
pub fn sum_e(table: &CoefficientTable, eta: u32, checkpoints: &[u64]) -> Result<SumReport> {
    check_checkpoints(table, checkpoints)?;
    let powers: Vec<f64> = (0..=16).map(|k| (eta as f64).powi(k)).collect();
    Ok(SumReport {
        params: params_of(table, Some(eta)),
        w_d: qforms::unit_count(table.disc()),
        checkpoints: accumulate(table, checkpoints, |n| powers[table.omega(n) as usize]),
        main_term: None,
        fitted_slope: None,
        bound_constant: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainTermConstants {
    pub eta: u32,
    pub disc: i64,
    pub level: u64,
    pub p1: f64,
    pub p1_tail_bound: f64,
    pub p_cut: u64,
    pub l1: f64,
    pub l1_method: L1Method,
}

impl MainTermConstants {
    /// `P(1)` from the truncated product and `L(1, chi_D)` from the class
    /// number formula when `D` is fundamental, the direct sum otherwise.
    pub fn compute(eta: u32, disc: i64, level: u64, p_cut: u64) -> Result<Self> {
        let p = dirichlet::p_euler(Complex64::new(1.0, 0.0), disc, level, eta, p_cut)?;
        let method = if arith::is_fundamental_discriminant(disc) {
            L1Method::ClassNumberFormula
        } else {
            L1Method::DirectSum
        };
        let l1 = dirichlet::l1_chi(disc, method)?;
        Ok(MainTermConstants {
            eta,
            disc,
            level,
            p1: p.value.re,
            p1_tail_bound: p.tail_bound,
            p_cut,
            l1: l1.value,
            l1_method: method,
        })
    }

    /// `P(1) L(1, chi)^eta / Gamma(eta) X (log X)^{eta - 1}`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < std::f64::consts::E {
            return Err(Error::Domain(format!("main term needs X >= e, got {x}")));
        }
        let gamma: f64 = (1..self.eta).map(f64::from).product();
        Ok(self.p1 * self.l1.powi(self.eta as i32) / gamma * x * x.ln().powi(self.eta as i32 - 1))
    }

    pub fn attach(&self, mut report: SumReport) -> Result<SumReport> {
        let main = report
            .checkpoints
            .iter()
            .map(|c| {
                Ok(Checkpoint {
                    x: c.x,
                    value: self.eval(c.x as f64)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        report.main_term = Some(main);
        Ok(report)
    }
}

/// Main term of `E_eta(X)` with the default Euler product cut.
pub fn main_term_e(eta: u32, disc: i64, level: u64, x: f64) -> Result<f64> {
    MainTermConstants::compute(eta, disc, level, dirichlet::DEFAULT_P_CUT)?.eval(x)
}

/// Least-squares slope of `log|v|` against `log X`, skipping points with
/// `|v| < 1`.
pub fn fit_slope(points: &[Checkpoint]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|c| c.value.abs() >= 1.0 && c.x >= 1)
        .map(|c| ((c.x as f64).ln(), c.value.abs().ln()))
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            usable: usable.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Sieve-free evaluation of `S*(X)`, one factorization per term.
pub fn pointwise_sum_s(entry: &EigenformEntry, disc: i64, x: u64) -> Result<f64> {
    ClassNumberRecord::compute(disc)?.principal()?;
    let mut sum = KahanSum::new();
    for n in 1..=x {
        if arith::is_squarefree(n) && gcd(n, entry.level()) == 1 {
            sum.add(entry.lambda(n)? * qforms::r_star(n, disc) as f64);
        }
    }
    Ok(sum.value())
}

/// Sieve-free evaluation of `E_eta(X)`.
pub fn pointwise_sum_e(eta: u32, disc: i64, level: u64, x: u64) -> Result<f64> {
    ClassNumberRecord::compute(disc)?.principal()?;
    let mut sum = KahanSum::new();
    for n in 1..=x {
        if arith::is_squarefree(n) && gcd(n, level) == 1 {
            sum.add((eta as f64).powi(arith::omega(n) as i32) * qforms::r_star(n, disc) as f64);
        }
    }
    Ok(sum.value())
}

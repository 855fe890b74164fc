//! The batch gate suite: each gate runs one family of checks over the
//! catalog and reports a single pass/fail verdict with a short detail line.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::gcd;
use crate::dirichlet::{self, L1Method};
use crate::eigenforms::{self, EigenformEntry};
use crate::moments::{self, MainTermConstants};
use crate::qforms::{self, CLASS_NUMBER_ONE};
use crate::sieves;
use crate::signchange::{self, InitialSegment, ScanScope, SignChangeOutcome, StepKernel};
use crate::{Error, Result, VERSION};

/// Expansion depth of the full run; the slope gate needs `2^20`.
pub const FULL_DEPTH: usize = 1 << 20;

/// Expansion depth of the quick run.
pub const QUICK_DEPTH: usize = 1 << 14;

/// Sizes of every gate. [`VerifyConfig::full`] and [`VerifyConfig::quick`]
/// are the two supported presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub mode: String,
    pub depth: usize,
    pub representation_limit: u64,
    pub hecke_limit: u64,
    pub hecke_samples: usize,
    pub deligne_limit: u64,
    pub deligne_tol: f64,
    pub identity_length: usize,
    pub identity_tol: f64,
    pub display_primes: u64,
    pub main_term_x: u64,
    pub main_term_band: (f64, f64),
    pub l1_tol: f64,
    pub p_cut: u64,
    pub sigma_step: f64,
    pub sigma_series_terms: usize,
    pub sigma_agreement: f64,
    pub sigma_margin: f64,
    pub minorant_x: u64,
    pub sign_change_scan: usize,
    pub slope_lo_exp: u32,
    pub slope_x: u64,
    pub slope_max: f64,
    pub oracle_x: u64,
    pub oracle_tol: f64,
    pub satake_m: u32,
    pub satake_resolution: f64,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
}

impl VerifyConfig {
    pub fn full() -> Self {
        VerifyConfig {
            mode: "full".into(),
            depth: FULL_DEPTH,
            representation_limit: 100_000,
            hecke_limit: 10_000,
            hecke_samples: 200,
            deligne_limit: 100_000,
            deligne_tol: 1e-9,
            identity_length: 2000,
            identity_tol: 1e-9,
            display_primes: 200,
            main_term_x: 1_000_000,
            main_term_band: (0.95, 1.05),
            l1_tol: 1e-6,
            p_cut: dirichlet::DEFAULT_P_CUT,
            sigma_step: 1e-3,
            sigma_series_terms: 8,
            sigma_agreement: 1e-3,
            sigma_margin: 0.01,
            minorant_x: 1_000_000,
            sign_change_scan: 1000,
            slope_lo_exp: 14,
            slope_x: 1 << 20,
            slope_max: 0.75,
            oracle_x: 10_000,
            oracle_tol: 1e-8,
            satake_m: 10,
            satake_resolution: 1e-5,
            seed: 0,
            cache_dir: None,
        }
    }

    /// Every data-dependent gate capped at `X = 10^4`.
    pub fn quick() -> Self {
        VerifyConfig {
            mode: "quick".into(),
            depth: QUICK_DEPTH,
            representation_limit: 10_000,
            deligne_limit: 10_000,
            main_term_x: 10_000,
            minorant_x: 10_000,
            slope_lo_exp: 6,
            slope_x: 1 << 13,
            p_cut: 100_000,
            ..Self::full()
        }
    }

    fn minimal_depth(&self) -> usize {
        [
            self.hecke_limit,
            self.deligne_limit,
            self.identity_length as u64,
            self.main_term_x,
            self.minorant_x,
            self.sign_change_scan as u64,
            self.slope_x,
            self.oracle_x,
        ]
        .into_iter()
        .max()
        .unwrap() as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall time; left out of the JSON report so that it stays reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub config: VerifyConfig,
    pub gates: Vec<GateResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failing(&self) -> impl Iterator<Item = &GateResult> {
        self.gates.iter().filter(|g| !g.passed)
    }
}

fn run_gate<F>(id: u32, name: &str, f: F) -> GateResult
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    GateResult {
        id,
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Catalog entries for a run, with the cache problems met while loading.
pub struct CatalogData {
    pub entries: Vec<EigenformEntry>,
    pub cache_errors: Vec<String>,
}

impl CatalogData {
    pub fn entry(&self, label: &str) -> Result<&EigenformEntry> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| Error::Domain(format!("unknown catalog form '{label}'")))
    }
}

/// Load one form from `dir` when a deep enough cache exists, otherwise
/// expand it and (re)write the cache. A cache that fails validation is
/// reported and left in place; the form is then expanded in memory.
pub fn load_or_expand(
    dir: Option<&Path>,
    label: &str,
    depth: usize,
) -> Result<(EigenformEntry, Option<String>)> {
    let eta = eigenforms::catalog_spec(label)?;
    let Some(dir) = dir else {
        return Ok((EigenformEntry::expand(label, eta, depth)?, None));
    };
    let path = dir.join(eigenforms::cache_file_name(eta.level, eta.weight));
    if path.exists() {
        match eigenforms::load_cache(&path, label, eta.clone()) {
            Ok(entry) if entry.depth() >= depth => return Ok((entry.truncated(depth)?, None)),
            Ok(_) => {}
            Err(e @ Error::Cache { .. }) => {
                return Ok((EigenformEntry::expand(label, eta, depth)?, Some(e.to_string())));
            }
            Err(e) => return Err(e),
        }
    }
    let entry = EigenformEntry::expand(label, eta, depth)?;
    eigenforms::write_cache(dir, &entry)?;
    Ok((entry, None))
}

pub fn load_catalog(config: &VerifyConfig) -> Result<CatalogData> {
    let depth = config.depth.max(config.minimal_depth());
    let mut entries = Vec::new();
    let mut cache_errors = Vec::new();
    for (label, _) in eigenforms::catalog_specs() {
        let (entry, err) = load_or_expand(config.cache_dir.as_deref(), label, depth)?;
        entries.push(entry);
        cache_errors.extend(err);
    }
    Ok(CatalogData {
        entries,
        cache_errors,
    })
}

/// Divisor formula against bulk lattice enumeration for every catalog
/// discriminant.
pub fn gate_representation(config: &VerifyConfig) -> GateResult {
    run_gate(1, "representation formula", || {
        let x = config.representation_limit;
        let mut bad = Vec::new();
        for d in CLASS_NUMBER_ONE {
            let form = qforms::class_one_form(d)?;
            let counts = qforms::lattice_counts_upto(&form, x);
            let mut mismatches = 0u64;
            let mut first = None;
            for n in 1..=x {
                if qforms::r_q(n, d)? != counts[n as usize] {
                    mismatches += 1;
                    first.get_or_insert(n);
                }
            }
            if let Some(n) = first {
                bad.push(format!("D={d}: {mismatches} mismatches, first n={n}"));
            }
        }
        if bad.is_empty() {
            Ok((true, format!("13 discriminants agree for n <= {x}")))
        } else {
            Ok((false, bad.join("; ")))
        }
    })
}

/// Exact Hecke relations for coprime pairs, a seeded sample of pairs up to
/// the expansion depth, Deligne's bound, and cache validation.
pub fn gate_hecke(config: &VerifyConfig, data: &CatalogData) -> GateResult {
    run_gate(2, "Hecke suite", || {
        let mut notes = Vec::new();
        let mut ok = true;
        for e in &data.cache_errors {
            ok = false;
            notes.push(format!("corrupted coefficient cache: {e}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for entry in &data.entries {
            let suite = eigenforms::hecke_suite(entry, config.hecke_limit)?;
            if !suite.passed() {
                ok = false;
                notes.push(format!(
                    "{}: {} of {} pairs fail, first {:?}",
                    entry.label, suite.failures, suite.pairs_checked, suite.first_failure
                ));
            }
            let depth = entry.depth() as u64;
            let mut sampled = 0;
            while sampled < config.hecke_samples {
                let m = rng.gen_range(2..=crate::arith::isqrt(depth));
                let n = rng.gen_range(m..=depth / m);
                if gcd(m * n, entry.level()) != 1 {
                    continue;
                }
                sampled += 1;
                if !eigenforms::hecke_check(entry, m, n)? {
                    ok = false;
                    notes.push(format!("{}: sampled pair ({m}, {n}) fails", entry.label));
                    break;
                }
            }
            let p_max = config.deligne_limit.min(depth);
            let deligne = eigenforms::deligne_check(entry, p_max, config.deligne_tol)?;
            if !deligne.violations.is_empty() {
                ok = false;
                notes.push(format!(
                    "{}: Deligne bound fails at p = {:?}",
                    entry.label,
                    &deligne.violations[..deligne.violations.len().min(5)]
                ));
            }
        }
        if ok {
            notes.push(format!(
                "4 forms: coprime mn <= {}, {} sampled pairs each, |lambda(p)| <= 2 for p <= {}",
                config.hecke_limit, config.hecke_samples, config.deligne_limit
            ));
        }
        Ok((ok, notes.join("; ")))
    })
}

/// Coefficient-level factorization identities; disagreements of the
/// closed-form local polynomial with the ratio definition are listed
/// without failing the gate.
pub fn gate_identities(config: &VerifyConfig, data: &CatalogData) -> GateResult {
    run_gate(3, "factorization identities", || {
        let n_max = config.identity_length;
        let mut worst_l = 0.0f64;
        let mut worst_d = 0.0f64;
        let mut display = Vec::new();
        for entry in &data.entries {
            for d in CLASS_NUMBER_ONE {
                worst_l = worst_l.max(dirichlet::coefficient_identity_check(entry, d, n_max)?);
                for eta in 1..=3 {
                    worst_d = worst_d.max(dirichlet::d_series_check(eta, d, entry.level(), n_max)?);
                }
                let disc =
                    dirichlet::g_display_discrepancies(entry, d, config.display_primes, 2.0, 1e-9)?;
                for g in disc {
                    display.push(format!("{}/D={}/p={}", entry.label, d, g.p));
                }
            }
        }
        let tol = config.identity_tol;
        let passed = worst_l < tol && worst_d < tol;
        let mut detail = format!(
            "max deviation L-identity {worst_l:.3e}, D-series {worst_d:.3e} at n_max = {n_max}"
        );
        if !display.is_empty() {
            detail.push_str(&format!(
                "; closed-form G differs from the ratio form at {} (form, D, p) cases, e.g. {}",
                display.len(),
                display[..display.len().min(4)].join(", ")
            ));
        }
        Ok((passed, detail))
    })
}

/// `E_1(X) / (P(1) L(1, chi_{-4}) X)` with `L(1, chi_{-4})` by two methods.
pub fn gate_main_term(config: &VerifyConfig, data: &CatalogData) -> GateResult {
    run_gate(4, "E_1 main term", || {
        let x = config.main_term_x;
        let entry = data.entry("delta")?;
        let table = sieves::build_table(entry, -4, x as usize)?;
        let report = moments::sum_e(&table, 1, &[x])?;
        let constants = MainTermConstants::compute(1, -4, 1, config.p_cut)?;
        let ratio = report.checkpoints[0].value / constants.eval(x as f64)?;
        let direct = dirichlet::l1_chi(-4, L1Method::DirectSum)?.value;
        let formula = dirichlet::l1_chi(-4, L1Method::ClassNumberFormula)?.value;
        let err = (direct - PI / 4.0).abs().max((formula - PI / 4.0).abs());
        let (lo, hi) = config.main_term_band;
        let passed = (lo..=hi).contains(&ratio) && err <= config.l1_tol;
        Ok((
            passed,
            format!(
                "ratio {ratio:.6} at X = {x} (band [{lo}, {hi}]), P(1) = {:.8} (tail <= {:.1e}), |L(1) - pi/4| <= {err:.2e}",
                constants.p1, constants.p1_tail_bound
            ),
        ))
    })
}

/// March and series solutions of the delay equation at `u = 4/3`.
pub fn gate_sigma(config: &VerifyConfig) -> GateResult {
    run_gate(5, "sigma(4/3) positivity", || {
        let kernel = StepKernel::new();
        let u = 4.0 / 3.0;
        let march = signchange::sigma_march(&kernel, u, config.sigma_step, InitialSegment::Equation)?;
        let m = march.value_at(u)?;
        let s = signchange::sigma_series(&kernel, u, config.sigma_series_terms)?;
        let diff = (m - s).abs();
        let passed = diff <= config.sigma_agreement && m > config.sigma_margin && s > config.sigma_margin;
        Ok((
            passed,
            format!(
                "march {m:.9}, series (J = {}) {s:.9}, |diff| {diff:.2e}; required > {}",
                config.sigma_series_terms, config.sigma_margin
            ),
        ))
    })
}

/// `sum_{n <= X} h_Y(n) r*(n) > 0` with `Y = X^{3/4}`, `D = -4`, `N = 1`.
pub fn gate_minorant(config: &VerifyConfig, data: &CatalogData) -> GateResult {
    run_gate(6, "minorant positivity", || {
        let x = config.minorant_x;
        let table = sieves::build_table(data.entry("delta")?, -4, x as usize)?;
        let y = (x as f64).powf(0.75);
        let value = signchange::minorant_sum(&table, y, 4.0 / 3.0, &StepKernel::new())?;
        Ok((value > 0.0, format!("sum = {value:.6e} at X = {x}, Y = {y:.3}")))
    })
}

/// First sign changes of Delta on the forms of discriminant -4 and -3.
pub fn gate_sign_change(config: &VerifyConfig, data: &CatalogData) -> GateResult {
    run_gate(7, "first sign change", || {
        let entry = data.entry("delta")?;
        let mut notes = Vec::new();
        let mut ok = true;
        for (d, expected) in [(-4i64, 2u64), (-3, 7)] {
            let table = sieves::build_table(entry, d, config.sign_change_scan)?;
            let outcome = signchange::first_sign_change(&table, entry)?;
            let Some(rec) = outcome.record() else {
                ok = false;
                notes.push(format!("D={d}: no sign change up to {}", config.sign_change_scan));
                continue;
            };
            let exact_negative = entry.a(rec.n_first)? < 0;
            let good = rec.n_first == expected && exact_negative && rec.ratio <= 1.0;
            ok &= good;
            let mut note = format!(
                "D={d}: n = {} (expected {expected}), a(n) = {}, ratio {:.3e}",
                rec.n_first, rec.a_value, rec.ratio
            );
            if rec.n_first != expected {
                if let SignChangeOutcome::Found(sq) =
                    signchange::first_sign_change_in(&table, entry, ScanScope::Squarefree)?
                {
                    note.push_str(&format!(", squarefree-only scan gives {}", sq.n_first));
                }
            }
            notes.push(note);
        }
        Ok((ok, notes.join("; ")))
    })
}

/// Fitted slope of `|S*(X)|` over dyadic checkpoints for every (form, D).
pub fn gate_slope(config: &VerifyConfig, data: &CatalogData) -> GateResult {
    run_gate(8, "S* slope", || {
        let checkpoints = moments::dyadic_checkpoints(config.slope_lo_exp, config.slope_x);
        let mut worst: Option<(f64, String, i64)> = None;
        let mut offenders = Vec::new();
        for entry in &data.entries {
            for d in CLASS_NUMBER_ONE {
                let table = sieves::build_table(entry, d, config.slope_x as usize)?;
                let slope = moments::fit_slope(&moments::sum_s(&table, &checkpoints)?.checkpoints)?;
                if slope > config.slope_max {
                    offenders.push(format!("{}/D={d}: {slope:.3}", entry.label));
                }
                if worst.as_ref().is_none_or(|w| slope > w.0) {
                    worst = Some((slope, entry.label.clone(), d));
                }
            }
        }
        let (slope, label, d) = worst.expect("catalog is not empty");
        let mut detail = format!(
            "max slope {slope:.4} ({label}, D={d}) over X in [2^{}, {}], limit {}",
            config.slope_lo_exp, config.slope_x, config.slope_max
        );
        if !offenders.is_empty() {
            detail.push_str(&format!("; above limit: {}", offenders.join(", ")));
        }
        Ok((offenders.is_empty(), detail))
    })
}

/// Sieved sums against the per-term evaluators.
pub fn gate_oracle(config: &VerifyConfig, data: &CatalogData) -> GateResult {
    run_gate(9, "sieve-free oracle", || {
        let x = config.oracle_x;
        let checkpoints: Vec<u64> = [1, 10, 100, 1000, 10_000, 100_000]
            .into_iter()
            .filter(|&c| c < x)
            .chain(std::iter::once(x))
            .collect();
        let close = |a: f64, b: f64| (a - b).abs() <= config.oracle_tol * b.abs().max(1.0);
        let mut bad = Vec::new();
        for entry in &data.entries {
            for d in CLASS_NUMBER_ONE {
                let table = sieves::build_table(entry, d, x as usize)?;
                let s = moments::sum_s(&table, &checkpoints)?;
                for c in &s.checkpoints {
                    let o = moments::pointwise_sum_s(entry, d, c.x)?;
                    if !close(c.value, o) {
                        bad.push(format!("S {}/D={d}/X={}", entry.label, c.x));
                    }
                }
                for eta in 1..=3 {
                    let e = moments::sum_e(&table, eta, &checkpoints)?;
                    for c in &e.checkpoints {
                        let o = moments::pointwise_sum_e(eta, d, entry.level(), c.x)?;
                        if !close(c.value, o) {
                            bad.push(format!("E_{eta} {}/D={d}/X={}", entry.label, c.x));
                        }
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok((true, format!("S* and E_1..E_3 agree for 52 (form, D) pairs at X <= {x}")))
        } else {
            Ok((false, format!("{} mismatches: {}", bad.len(), bad[..bad.len().min(5)].join(", "))))
        }
    })
}

pub fn gate_satake(config: &VerifyConfig) -> GateResult {
    run_gate(10, "Satake step property", || {
        let mut failing = Vec::new();
        for m in 1..=config.satake_m {
            if !signchange::satake_step_property(m, config.satake_resolution)? {
                failing.push(m);
            }
        }
        if failing.is_empty() {
            Ok((
                true,
                format!("m = 1..{} at resolution {:e}", config.satake_m, config.satake_resolution),
            ))
        } else {
            Ok((false, format!("fails for m = {failing:?}")))
        }
    })
}

/// Run every gate in order.
pub fn run(config: &VerifyConfig) -> Result<VerifyReport> {
    let data = load_catalog(config)?;
    let gates = vec![
        gate_representation(config),
        gate_hecke(config, &data),
        gate_identities(config, &data),
        gate_main_term(config, &data),
        gate_sigma(config),
        gate_minorant(config, &data),
        gate_sign_change(config, &data),
        gate_slope(config, &data),
        gate_oracle(config, &data),
        gate_satake(config),
    ];
    let passed = gates.iter().all(|g| g.passed);
    Ok(VerifyReport {
        version: VERSION.to_string(),
        config: config.clone(),
        gates,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> VerifyConfig {
        VerifyConfig {
            depth: 2000,
            representation_limit: 500,
            hecke_limit: 500,
            hecke_samples: 20,
            deligne_limit: 2000,
            identity_length: 300,
            main_term_x: 2000,
            main_term_band: (0.5, 1.5),
            minorant_x: 2000,
            sign_change_scan: 100,
            slope_lo_exp: 6,
            slope_x: 2000,
            oracle_x: 1000,
            satake_m: 3,
            satake_resolution: 1e-3,
            p_cut: 10_000,
            ..VerifyConfig::quick()
        }
    }

    #[test]
    fn corrupted_cache_fails_the_hecke_gate() {
        let dir = std::env::temp_dir().join(format!("hecke-verify-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let (entry, err) = load_or_expand(Some(&dir), "delta", 500).unwrap();
        assert!(err.is_none());
        let path = dir.join(eigenforms::cache_file_name(1, 12));
        let text = std::fs::read_to_string(&path).unwrap();
        // tau(98) = tau(2) tau(49): shift a(98) by one
        let bumped: String = text
            .lines()
            .map(|l| {
                if let Some(v) = l.strip_prefix("98,") {
                    format!("98,{}\n", v.parse::<i128>().unwrap() + 1)
                } else {
                    format!("{l}\n")
                }
            })
            .collect();
        std::fs::write(&path, bumped).unwrap();
        let (fresh, err) = load_or_expand(Some(&dir), "delta", 500).unwrap();
        assert!(err.unwrap().contains("Hecke relation fails"));
        assert_eq!(fresh.coefficients(), entry.coefficients());

        let data = CatalogData {
            entries: vec![fresh],
            cache_errors: vec!["bad".into()],
        };
        let mut config = tiny();
        config.hecke_limit = 100;
        let gate = gate_hecke(&config, &data);
        assert!(!gate.passed);
        assert!(gate.detail.contains("corrupted coefficient cache"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn shallow_cache_is_regenerated() {
        let dir = std::env::temp_dir().join(format!("hecke-shallow-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        load_or_expand(Some(&dir), "d11k2", 100).unwrap();
        let (entry, err) = load_or_expand(Some(&dir), "d11k2", 300).unwrap();
        assert!(err.is_none());
        assert_eq!(entry.depth(), 300);
        let (again, _) = load_or_expand(Some(&dir), "d11k2", 200).unwrap();
        assert_eq!(again.depth(), 200);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn tiny_run_is_deterministic() {
        let config = tiny();
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.gates.len(), 10);
        let ids: Vec<u32> = a.gates.iter().map(|g| g.id).collect();
        assert_eq!(ids, (1..=10).collect::<Vec<_>>());
        for id in [2, 3, 9, 10] {
            assert!(a.gates[id - 1].passed, "{:?}", a.gates[id - 1]);
        }
    }
}

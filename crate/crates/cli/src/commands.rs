use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::json;

use hecke_qf::eigenforms::{self, EigenformEntry, MAX_DEPTH};
use hecke_qf::moments::{self, MainTermConstants};
use hecke_qf::qforms::{self, ClassNumberRecord, CLASS_NUMBER_ONE};
use hecke_qf::signchange::{self, InitialSegment, ScanScope, StepKernel};
use hecke_qf::verify::{self, VerifyConfig};
use hecke_qf::{sieves, VERSION};

use crate::config::RunConfig;
use crate::Command;

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<hecke_qf::Error> for CliError {
    fn from(e: hecke_qf::Error) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: 1,
        message: format!("{}: {e}", path.display()),
    }
}

fn emit(run: &RunConfig, text: &str) -> CliResult<()> {
    match &run.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| io_error(Path::new("<stdout>"), e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// CSV goes to `--out`; the run record goes next to it as `<out>.meta.json`.
/// Without `--out` only the CSV is printed.
fn emit_csv(run: &RunConfig, csv: &str, meta: serde_json::Value) -> CliResult<()> {
    emit(run, csv)?;
    if let Some(path) = &run.out {
        let mut name = path.as_os_str().to_owned();
        name.push(".meta.json");
        let meta_path = std::path::PathBuf::from(name);
        std::fs::write(&meta_path, to_json(&meta)).map_err(|e| io_error(&meta_path, e))?;
    }
    Ok(())
}

fn check_form(label: &str) -> CliResult<()> {
    eigenforms::catalog_spec(label).map(|_| ()).map_err(|e| usage(e.to_string()))
}

fn check_disc(run: &RunConfig, disc: i64) -> CliResult<()> {
    if run.force || CLASS_NUMBER_ONE.contains(&disc) {
        Ok(())
    } else {
        Err(usage(format!(
            "discriminant {disc} is not one of {CLASS_NUMBER_ONE:?}; pass --force to try anyway"
        )))
    }
}

fn check_xmax(x_max: u64) -> CliResult<()> {
    if x_max as usize > MAX_DEPTH {
        return Err(usage(format!("--xmax {x_max} exceeds the memory budget {MAX_DEPTH}")));
    }
    Ok(())
}

fn load(run: &RunConfig, label: &str, depth: u64) -> CliResult<EigenformEntry> {
    let (entry, err) = verify::load_or_expand(Some(&run.cache_dir), label, depth as usize)?;
    match err {
        None => Ok(entry),
        Some(e) => Err(CliError {
            code: 1,
            message: format!("{e}; remove the file or point --cache-dir elsewhere"),
        }),
    }
}

pub fn dispatch(command: &Command, mut run: RunConfig) -> CliResult<ExitCode> {
    match command {
        Command::Catalog { json } => {
            run.command = "catalog".into();
            catalog(&run, *json)
        }
        Command::Verify { quick } => {
            run.command = "verify".into();
            verify_cmd(&run, *quick)
        }
        Command::Coeffs { form, xmax } => {
            run.command = "coeffs".into();
            check_form(form)?;
            check_xmax(*xmax)?;
            run.form = Some(form.clone());
            run.x_max = Some(*xmax);
            coeffs(&run)
        }
        Command::Sum { form, disc, xmax, lo_exp } => {
            run.command = "sum".into();
            check_form(form)?;
            check_disc(&run, *disc)?;
            check_xmax(*xmax)?;
            run.form = Some(form.clone());
            run.disc = Some(*disc);
            run.x_max = Some(*xmax);
            run.checkpoints = Some(format!("dyadic from 2^{lo_exp}, then X_max"));
            sum(&run, *lo_exp)
        }
        Command::EtaMean { eta, disc, form, xmax, lo_exp, p_cut } => {
            run.command = "eta-mean".into();
            check_form(form)?;
            check_disc(&run, *disc)?;
            check_xmax(*xmax)?;
            run.form = Some(form.clone());
            run.disc = Some(*disc);
            run.eta = Some(*eta);
            run.x_max = Some(*xmax);
            run.checkpoints = Some(format!("dyadic from 2^{lo_exp}, then X_max"));
            eta_mean(&run, *lo_exp, *p_cut)
        }
        Command::Sigma { umax, step, terms, prescribe_until, grid_csv } => {
            run.command = "sigma".into();
            let initial = match prescribe_until {
                Some(x) => InitialSegment::Prescribed(*x),
                None => InitialSegment::Equation,
            };
            sigma(&run, *umax, *step, *terms, initial, grid_csv.as_deref())
        }
        Command::SignChange { form, disc, xmax, squarefree } => {
            run.command = "sign-change".into();
            check_form(form)?;
            check_disc(&run, *disc)?;
            check_xmax(*xmax)?;
            run.form = Some(form.clone());
            run.disc = Some(*disc);
            run.x_max = Some(*xmax);
            let scope = if *squarefree { ScanScope::Squarefree } else { ScanScope::AllIntegers };
            sign_change(&run, scope)
        }
        Command::Slope { form, disc, xmax, lo_exp } => {
            run.command = "slope".into();
            check_form(form)?;
            check_disc(&run, *disc)?;
            check_xmax(*xmax)?;
            run.form = Some(form.clone());
            run.disc = Some(*disc);
            run.x_max = Some(*xmax);
            run.checkpoints = Some(format!("dyadic from 2^{lo_exp}"));
            slope(&run, *lo_exp)
        }
    }
}

fn catalog(run: &RunConfig, json: bool) -> CliResult<ExitCode> {
    let forms: Vec<_> = eigenforms::catalog_specs()
        .into_iter()
        .map(|(label, eta)| json!({
            "label": label,
            "level": eta.level,
            "weight": eta.weight,
            "eta_factors": eta.factors,
        }))
        .collect();
    let mut discs = Vec::new();
    for d in CLASS_NUMBER_ONE {
        let rec = ClassNumberRecord::compute(d)?;
        discs.push(rec);
    }
    let text = if json {
        to_json(&json!({ "version": VERSION, "forms": forms, "discriminants": discs }))
    } else {
        let mut s = String::from("forms\n");
        for (label, eta) in eigenforms::catalog_specs() {
            let factors: Vec<String> = eta.factors.iter().map(|(m, r)| format!("eta({m}z)^{r}")).collect();
            s.push_str(&format!(
                "  {label:<6} N={:<3} k={:<3} {}\n",
                eta.level,
                eta.weight,
                factors.join(" ")
            ));
        }
        s.push_str("class number one discriminants\n");
        for rec in &discs {
            let f = rec.principal()?;
            s.push_str(&format!("  D={:<5} w={} form={}\n", rec.disc, rec.w_d, f));
        }
        s
    };
    emit(run, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(run: &RunConfig, quick: bool) -> CliResult<ExitCode> {
    let mut config = if quick { VerifyConfig::quick() } else { VerifyConfig::full() };
    config.seed = run.seed;
    config.cache_dir = Some(run.cache_dir.clone());
    let report = verify::run(&config)?;
    for g in &report.gates {
        let status = if g.passed { "PASS" } else { "FAIL" };
        eprintln!("[{status}] {:>2} {} ({:.1}s): {}", g.id, g.name, g.seconds, g.detail);
    }
    let text = to_json(&json!({ "run": run, "report": report }));
    match &run.out {
        Some(_) => emit(run, &text)?,
        None => {
            let path = Path::new("verify-report.json");
            std::fs::write(path, &text).map_err(|e| io_error(path, e))?;
        }
    }
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        let names: Vec<&str> = report.failing().map(|g| g.name.as_str()).collect();
        eprintln!("failing gates: {}", names.join(", "));
        Ok(ExitCode::from(1))
    }
}

fn coeffs(run: &RunConfig) -> CliResult<ExitCode> {
    let x = run.x_max.unwrap();
    let entry = load(run, run.form.as_deref().unwrap(), x)?;
    let mut csv = String::from("n,a,lambda\n");
    for n in 1..=x {
        csv.push_str(&format!("{n},{},{}\n", entry.a(n)?, entry.lambda(n)?));
    }
    emit_csv(run, &csv, json!({ "version": VERSION, "run": run }))?;
    Ok(ExitCode::SUCCESS)
}

fn table_for(run: &RunConfig) -> CliResult<sieves::CoefficientTable> {
    let x = run.x_max.unwrap();
    let entry = load(run, run.form.as_deref().unwrap(), x)?;
    Ok(sieves::build_table(&entry, run.disc.unwrap(), x as usize)?)
}

fn checkpoints(lo_exp: u32, x_max: u64) -> CliResult<Vec<u64>> {
    let c = moments::dyadic_checkpoints(lo_exp, x_max);
    if c.is_empty() {
        return Err(usage(format!("no dyadic checkpoint 2^{lo_exp} <= {x_max}")));
    }
    Ok(c)
}

/// Dyadic checkpoints followed by `x_max` itself.
fn checkpoints_through(lo_exp: u32, x_max: u64) -> CliResult<Vec<u64>> {
    let mut c = checkpoints(lo_exp, x_max)?;
    if c.last() != Some(&x_max) {
        c.push(x_max);
    }
    Ok(c)
}

fn sum(run: &RunConfig, lo_exp: u32) -> CliResult<ExitCode> {
    let table = table_for(run)?;
    let report = moments::sum_s(&table, &checkpoints_through(lo_exp, run.x_max.unwrap())?)?;
    let report = report.clone().with_fit().unwrap_or(report);
    let meta = json!({
        "version": VERSION,
        "run": run,
        "w_d": report.w_d,
        "fitted_slope": report.fitted_slope,
        "bound_constant": report.bound_constant,
    });
    emit_csv(run, &report.to_csv(), meta)?;
    Ok(ExitCode::SUCCESS)
}

fn eta_mean(run: &RunConfig, lo_exp: u32, p_cut: u64) -> CliResult<ExitCode> {
    let table = table_for(run)?;
    let eta = run.eta.unwrap();
    let points = checkpoints_through(lo_exp.max(2), run.x_max.unwrap())?;
    let report = moments::sum_e(&table, eta, &points)?;
    let constants = MainTermConstants::compute(eta, table.disc(), table.level(), p_cut)?;
    let report = constants.attach(report)?;
    let meta = json!({
        "version": VERSION,
        "run": run,
        "main_term_constants": constants,
    });
    emit_csv(run, &report.to_csv(), meta)?;
    Ok(ExitCode::SUCCESS)
}

fn sigma(
    run: &RunConfig,
    u_max: f64,
    step: f64,
    terms: usize,
    initial: InitialSegment,
    grid_csv: Option<&Path>,
) -> CliResult<ExitCode> {
    let kernel = StepKernel::new();
    let march = signchange::sigma_march(&kernel, u_max, step, initial)?;
    let series = signchange::sigma_series(&kernel, u_max, terms)?;
    let m = *march.values.last().unwrap();
    if let Some(path) = grid_csv {
        std::fs::write(path, march.to_csv()).map_err(|e| io_error(path, e))?;
    }
    let text = to_json(&json!({
        "version": VERSION,
        "run": run,
        "u_max": u_max,
        "step": march.step,
        "initial": initial,
        "series_terms": terms,
        "sigma_march": m,
        "sigma_series": series,
        "abs_difference": (m - series).abs(),
        "positive": m > 0.0 && series > 0.0,
        "max_grid_jump": march.max_jump(),
    }));
    emit(run, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn sign_change(run: &RunConfig, scope: ScanScope) -> CliResult<ExitCode> {
    let x = run.x_max.unwrap();
    let entry = load(run, run.form.as_deref().unwrap(), x)?;
    let table = sieves::build_table(&entry, run.disc.unwrap(), x as usize)?;
    let outcome = signchange::first_sign_change_in(&table, &entry, scope)?;
    let form = qforms::class_one_form(run.disc.unwrap())?;
    let text = to_json(&json!({
        "version": VERSION,
        "run": run,
        "scope": scope,
        "form": form,
        "result": outcome,
    }));
    emit(run, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn slope(run: &RunConfig, lo_exp: u32) -> CliResult<ExitCode> {
    let table = table_for(run)?;
    let report = moments::sum_s(&table, &checkpoints(lo_exp, run.x_max.unwrap())?)?.with_fit()?;
    let text = to_json(&json!({
        "version": VERSION,
        "run": run,
        "fitted_slope": report.fitted_slope,
        "bound_constant": report.bound_constant,
        "checkpoints": report.checkpoints,
    }));
    emit(run, &text)?;
    Ok(ExitCode::SUCCESS)
}

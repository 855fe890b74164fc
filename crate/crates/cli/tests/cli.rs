use std::path::Path;
use std::process::{Command, Output};

fn hecke(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hecke"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn catalog_lists_forms_and_discriminants() {
    let dir = tempfile::tempdir().unwrap();
    let o = hecke(dir.path(), &["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("N=1   k=12"));
    let line = text.lines().find(|l| l.contains("D=-163")).unwrap();
    assert!(line.contains("w=2") && line.ends_with("form=(1, 1, 41)"), "{line}");

    let o = hecke(dir.path(), &["catalog", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["forms"][0]["level"], 1);
    assert_eq!(v["forms"][0]["weight"], 12);
    assert_eq!(v["discriminants"].as_array().unwrap().len(), 13);
    let last = &v["discriminants"][12];
    assert_eq!(last["disc"], -163);
    assert_eq!(last["forms"][0]["c"], 41);
}

#[test]
fn sign_change_for_delta_on_the_gaussian_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = hecke(dir.path(), &["sign-change", "--form", "delta", "--disc", "-4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["n_first"], 2);
    assert_eq!(v["result"]["a_value"], -24);
    assert!(v["result"]["ratio"].as_f64().unwrap() <= 1.0);
    assert_eq!(v["run"]["disc"], -4);
    assert!(v["version"].as_str().unwrap().starts_with("hecke-qf "));
    assert!(dir.path().join("hecke-cache/coeffs_N1_k12.csv").exists());
}

#[test]
fn sigma_report_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    let o = hecke(dir.path(), &["sigma", "--umax", "1.3334", "--step", "1e-3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["sigma_march"].as_f64().unwrap() > 0.0);
    assert!(v["sigma_series"].as_f64().unwrap() > 0.0);
    assert!(v["abs_difference"].as_f64().unwrap() < 1e-3);
    assert_eq!(v["positive"], true);
}

#[test]
fn sum_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sum", "--form", "d11k2", "--disc", "-4", "--xmax", "1e4", "--out", "a.csv"];
    assert_eq!(hecke(dir.path(), &args).status.code(), Some(0));
    let mut again = args;
    again[8] = "b.csv";
    assert_eq!(hecke(dir.path(), &again).status.code(), Some(0));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "X,S_star,w_D_S,main_term,ratio");
    let xs: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(xs, ["1024", "2048", "4096", "8192", "10000"]);
    assert!(!text.contains('\r'));
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["run"]["x_max"], 10000);
    assert!(meta["fitted_slope"].is_number());
}

#[test]
fn eta_mean_carries_main_term_and_tail() {
    let dir = tempfile::tempdir().unwrap();
    let o = hecke(
        dir.path(),
        &["eta-mean", "--eta", "1", "--disc", "-4", "--xmax", "1e5", "--p-cut", "1e5", "--out", "e.csv"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let ratio: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((ratio - 1.0).abs() < 0.05, "{last}");
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("e.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["main_term_constants"]["p_cut"], 100000);
    assert!(meta["main_term_constants"]["p1_tail_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hecke(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(hecke(dir.path(), &["sum", "--form", "nope", "--disc", "-4", "--xmax", "100"]).status.code(), Some(2));
    assert_eq!(hecke(dir.path(), &["sum", "--form", "delta", "--disc", "-5", "--xmax", "100"]).status.code(), Some(2));
    assert_eq!(hecke(dir.path(), &["sum", "--form", "delta", "--disc", "-4", "--xmax", "1.5"]).status.code(), Some(2));
    // forced through, the library rejects D = -5
    let o = hecke(dir.path(), &["sum", "--form", "delta", "--disc", "-5", "--xmax", "100", "--force"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "# slope run\nxmax = 8192\nlo_exp = 8\numax = 1.2\n").unwrap();
    let o = hecke(dir.path(), &["--config", "run.conf", "slope", "--form", "d5k4", "--disc", "-7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["run"]["x_max"], 8192);
    assert_eq!(v["checkpoints"].as_array().unwrap().len(), 6);
}

#[test]
fn quick_verify_reports_every_gate() {
    let dir = tempfile::tempdir().unwrap();
    let o = hecke(dir.path(), &["verify", "--quick", "--out", "report.json"]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let gates = report["report"]["gates"].as_array().unwrap();
    assert_eq!(gates.len(), 10);
    let all_pass = report["report"]["passed"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 1 }));
    let hecke_gate = gates.iter().find(|g| g["name"] == "Hecke suite").unwrap();
    assert_eq!(hecke_gate["passed"], true);
    assert_eq!(report["report"]["config"]["mode"], "quick");
}

#[test]
fn corrupted_cache_names_the_hecke_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = hecke(dir.path(), &["coeffs", "--form", "delta", "--xmax", "16384", "--out", "c.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("hecke-cache/coeffs_N1_k12.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    // a(98) = a(2) a(49) is on the loader's sample; break it
    let bumped: String = text
        .lines()
        .map(|l| match l.strip_prefix("98,") {
            Some(v) => format!("98,{}\n", v.parse::<i128>().unwrap() + 1),
            None => format!("{l}\n"),
        })
        .collect();
    std::fs::write(&path, bumped).unwrap();

    let o = hecke(dir.path(), &["verify", "--quick", "--out", "report.json"]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("failing gates:") && stderr.contains("Hecke suite"), "{stderr}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let gate = &report["report"]["gates"][1];
    assert_eq!(gate["name"], "Hecke suite");
    assert_eq!(gate["passed"], false);
    assert!(gate["detail"].as_str().unwrap().contains("corrupted coefficient cache"));

    // other commands refuse the damaged cache
    let o = hecke(dir.path(), &["sign-change", "--form", "delta", "--disc", "-4"]);
    assert_eq!(o.status.code(), Some(1));
}

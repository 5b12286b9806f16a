use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rabi_blocks_cli::{presets, ScenarioConfig};

const SMALL: &str = r#"
name = "small"
n_max = 20

[model]
kind = "two_qubit"
hamiltonian = "full"

[model.params]
omega = 1.0
eps1 = 0.5
eps2 = 0.5
gamma = 1.0
lam1 = 0.3
lam2 = 0.2

[initial_state]
kind = "pattern"
spins = ["up", "down"]
alpha = 1.0

[grid]
points = 11
t_max = 2.0
"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rabi-blocks"));
    cmd.env_remove("RABI_BLOCKS_OUT");
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, file: &str, text: &str) -> String {
    let path = dir.join(file);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    (headers, rows)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn presets_round_trip_through_toml() {
    for name in presets::names() {
        let config = presets::load(name).unwrap();
        let text = config.to_toml_string().unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text, name).unwrap(), config, "{name}");
    }
}

#[test]
fn presets_subcommand_lists_names() {
    let o = bin().arg("presets").output().unwrap();
    assert_eq!(code(&o), 0);
    let listed: Vec<String> = String::from_utf8(o.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(listed, presets::names().map(String::from).collect::<Vec<_>>());
}

#[test]
fn simulate_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["simulate", "--preset", "chain_n4_dfs"], a.path())), 0);
    assert_eq!(code(&run(&["simulate", "--preset", "chain_n4_dfs"], b.path())), 0);
    let x = fs::read(a.path().join("chain_n4_dfs.csv")).unwrap();
    let y = fs::read(b.path().join("chain_n4_dfs.csv")).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn verify_passes_on_shipped_two_qubit_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--preset", "fig1"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&dir.path().join("fig1_verify.json"));
    assert_eq!(report["status"], "PASS");
    assert_eq!(report["model"], "two_qubit");
}

#[test]
fn verify_flags_a_symmetry_breaking_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[perturbation]\nspin1_x = 0.1\n");
    let cfg = write_config(dir.path(), "p.toml", &text);
    let o = run(&["verify", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 1);
    let report = json(&dir.path().join("small_verify.json"));
    assert_eq!(report["status"], "FAIL");
    let off = report["partitions"][0]["off_block_max"].as_f64().unwrap();
    assert!(off > 0.05, "{off}");
}

#[test]
fn chain_verify_reports_the_sector_census() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["verify", "--preset", "chain_n4_dfs"], dir.path())), 0);
    let report = json(&dir.path().join("chain_n4_dfs_verify.json"));
    let sectors = report["partitions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == "sectors")
        .unwrap();
    assert_eq!(sectors["sector_count"], 8);
    let half = sectors["sectors"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["m"] == 2)
        .count();
    assert_eq!(half, 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.toml", "name = \n".to_string()),
        ("unknown.toml", format!("{SMALL}\ncolour = 1\n")),
        (
            "observable.toml",
            format!("{SMALL}\n[output]\nobservables = [\"spin9z\"]\n"),
        ),
        (
            "truncated.toml",
            SMALL
                .replace("n_max = 20", "n_max = 1")
                .replace("alpha = 1.0", "alpha = 5.0"),
        ),
    ];
    for (file, text) in cases {
        let cfg = write_config(dir.path(), file, &text);
        let o = run(&["simulate", "--config", &cfg], dir.path());
        assert_eq!(code(&o), 2, "{file}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error:"), "{file}");
    }
    let o = run(&["simulate", "--config", "/nonexistent/x.toml"], dir.path());
    assert_eq!(code(&o), 2);
    let o = run(&["simulate"], dir.path());
    assert_eq!(code(&o), 2);
    let o = run(&["simulate", "--preset", "nope"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn truncation_error_names_the_required_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("n_max = 20", "n_max = 2")
        .replace("alpha = 1.0", "alpha = 5.0");
    let cfg = write_config(dir.path(), "t.toml", &text);
    let o = run(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_max"));
}

#[test]
fn compare_without_closed_form_exits_three_before_propagating() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["compare", "--preset", "fig3"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(!dir.path().join("fig3.csv").exists());
}

#[test]
fn compare_writes_numeric_analytic_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["compare", "--preset", "jc_resonance"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (headers, rows) = read_csv(&dir.path().join("jc_resonance.csv"));
    assert_eq!(&headers[..2], ["t", "tau"]);
    assert_eq!(rows.len(), 2000);
    let (analytic, arows) = read_csv(&dir.path().join("jc_resonance_analytic.csv"));
    assert!(analytic.contains(&"sigma_z_closed".to_string()));
    assert_eq!(arows.len(), 2000);
    let report = json(&dir.path().join("jc_resonance_compare.json"));
    for pair in report["pairs"].as_array().unwrap() {
        assert!(pair["max_abs"].as_f64().unwrap() <= 1e-8);
    }
}

#[test]
fn tolerance_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["compare", "--preset", "fig2"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL fig2"));
}

#[test]
fn two_qubit_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["simulate", "--preset", "fig3"], dir.path())), 0);
    let (headers, rows) = read_csv(&dir.path().join("fig3.csv"));
    for col in [
        "t",
        "tau",
        "sigma1z",
        "sigma2z",
        "sxx",
        "norm",
        "energy",
        "leakage",
        "concurrence",
    ] {
        assert!(headers.iter().any(|h| h == col), "{col} missing from {headers:?}");
    }
    assert_eq!(rows.len(), 2000);
    let tau = headers.iter().position(|h| h == "tau").unwrap();
    assert!((rows.last().unwrap()[tau] - 40.0).abs() < 1e-9);
    assert_eq!(rows[0][tau], 0.0);
}

#[test]
fn qutrit_csv_carries_scaled_time() {
    let dir = tempfile::tempdir().unwrap();
    let text = presets::source("fig4")
        .unwrap()
        .replace("n_max = 171", "n_max = 40")
        .replace("alpha = 7.0", "alpha = 2.0")
        .replace("points = 2000", "points = 50");
    let cfg = write_config(dir.path(), "q.toml", &text);
    assert_eq!(code(&run(&["simulate", "--config", &cfg], dir.path())), 0);
    let (headers, rows) = read_csv(&dir.path().join("fig4.csv"));
    for col in ["t", "omega_t", "Sigma1z", "SxSx", "n"] {
        assert!(headers.iter().any(|h| h == col), "{col} missing from {headers:?}");
    }
    assert_eq!(rows.len(), 50);
}

#[test]
fn out_flag_beats_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let cfg = write_config(env_dir.path(), "s.toml", SMALL);
    let o = Command::new(env!("CARGO_BIN_EXE_rabi-blocks"))
        .args(["simulate", "--config", &cfg])
        .env("RABI_BLOCKS_OUT", env_dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_dir.path().join("small.csv").exists());
    let o = Command::new(env!("CARGO_BIN_EXE_rabi-blocks"))
        .args(["simulate", "--config", &cfg, "--out"])
        .arg(flag_dir.path())
        .env("RABI_BLOCKS_OUT", env_dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(flag_dir.path().join("small.csv").exists());
}

#[test]
fn parallel_batch_keeps_order_and_worst_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "verify",
            "--preset",
            "chain_n4_dfs",
            "--preset",
            "fig1",
            "--preset",
            "chain_n4_aligned",
            "--jobs",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = stdout.lines().map(|l| l.split_whitespace().nth(1).unwrap()).collect();
    assert_eq!(names, ["chain_n4_dfs:", "fig1:", "chain_n4_aligned:"]);
    let bad = write_config(dir.path(), "bad.toml", "name = \n");
    let o = run(
        &["compare", "--preset", "fig3", "--config", &bad, "--jobs", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    let o = run(
        &["compare", "--preset", "fig3", "--preset", "decoupled", "--jobs", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
}

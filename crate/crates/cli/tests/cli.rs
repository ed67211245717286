use std::path::Path;
use std::process::Command;

use risqkd::experiments::{calibrate, RunConfig, Scenario};
use risqkd::qubo::{build_qubo, read_qubo};
use risqkd_cli::{run, EXIT_CALIBRATION, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("risqkd").chain(args.iter().copied()), &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn value(stdout: &str, key: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with(&format!("{key} = "))).unwrap();
    line.split(" = ").nth(1).unwrap().parse().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_calibration(dir: &Path) -> String {
    let path = dir.join("cal.toml");
    let r = cli(&["calibrate", "--out", path_str(&path)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    path.to_str().unwrap().to_string()
}

fn only_file_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

#[test]
fn zenith_link_budget_snr() {
    let r = cli(&["link-budget", "--elevation", "90", "--n", "0"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let snr = value(&r.stdout, "snr_db");
    assert!((snr - 26.0).abs() <= 1.5, "SNR(90) = {snr} dB");
}

#[test]
fn low_elevation_link_budget_matches_snr_anchor() {
    let r = cli(&["link-budget", "--elevation", "10"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!((value(&r.stdout, "snr_db") - 11.0).abs() < 1e-6);
    assert!(r.stdout.contains("feasible = true"));
}

#[test]
fn calibrate_output_round_trips_through_link_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_calibration(dir.path());
    let fitted = cli(&["link-budget", "--elevation", "80"]);
    let loaded = cli(&["--calibration", &cal, "link-budget", "--elevation", "80"]);
    assert_eq!(loaded.code, EXIT_OK);
    assert_eq!(fitted.stdout, loaded.stdout);
    assert!((value(&loaded.stdout, "qber") - 0.009).abs() < 1e-8);
}

#[test]
fn default_sweep_has_a_row_per_point_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_calibration(dir.path());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let r = cli(&["--calibration", &cal, "--no-timestamp", "sweep", "--out", path_str(p)]);
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let cfg = RunConfig::default();
    let data_rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data_rows, cfg.sweep.elevations_deg.len() * cfg.sweep.ris_sizes.len());
    assert!(!text.contains("generated_unix"));
}

#[test]
fn timestamp_is_written_unless_suppressed() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_calibration(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[sweep]\nelevations_deg = [30.0]\nris_sizes = [0, 8]\n[ris]\nn_elements = 8\n[anchors]\nris_elements = 0\n").unwrap();
    let out = dir.path().join("s.csv");
    let r = cli(&["--config", path_str(&cfg), "--calibration", &cal, "sweep", "--out", path_str(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(std::fs::read_to_string(&out).unwrap().contains("# generated_unix="));
}

#[test]
fn histogram_command_writes_all_bins() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_calibration(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[ris]\nn_elements = 32\n[anchors]\nris_elements = 0\n[sweep]\nattenuation_levels = [1.0, 0.1]\n").unwrap();
    let out = dir.path().join("h.csv");
    let r = cli(&["--config", path_str(&cfg), "--calibration", &cal, "histogram", "--out", path_str(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let text = std::fs::read_to_string(&out).unwrap();
    let counts: usize = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("attenuation"))
        .map(|l| l.split(',').nth(3).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counts, 64);
}

#[test]
fn optimize_prints_bits_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_calibration(dir.path());
    let trace = dir.path().join("trace.csv");
    let r = cli(&[
        "--calibration", &cal, "optimize", "--elevation", "45", "--n", "3", "--solver", "brute", "--trace", path_str(&trace),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let bits = r.stdout.lines().find_map(|l| l.strip_prefix("x = ")).unwrap();
    assert_eq!(bits.len(), 12);
    assert!(bits.chars().all(|c| c == '0' || c == '1'));
    assert!(value(&r.stdout, "qber") <= 0.11);
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("iteration,best_value\n"));
    let tabu = cli(&["--calibration", &cal, "optimize", "--elevation", "45", "--n", "3", "--solver", "tabu"]);
    assert_eq!(value(&tabu.stdout, "cost"), value(&r.stdout, "cost"));
}

#[test]
fn qubo_export_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cal_path = write_calibration(dir.path());
    let out = dir.path().join("model.qubo");
    let r = cli(&["--calibration", &cal_path, "qubo-export", "--n", "2", "--out", path_str(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let imported = read_qubo(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    let cfg = RunConfig::default();
    let cal = calibrate(&cfg).unwrap();
    let scenario = Scenario::build(&cfg, &cal, 45.0, 2, 0, 1.0).unwrap();
    let model = build_qubo(&scenario.objective, &[false; 8]).unwrap();
    assert_eq!(imported, model);
}

#[test]
fn unknown_flags_and_keys_are_config_errors() {
    let r = cli(&["sweep", "--bogus"]);
    assert_eq!(r.code, EXIT_CONFIG);
    assert!(r.stderr.contains("--bogus"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[optical]\nwavelength = 850e-9\n").unwrap();
    let r = cli(&["--config", path_str(&cfg), "calibrate"]);
    assert_eq!(r.code, EXIT_CONFIG);
    assert!(r.stderr.contains("wavelength"));
    assert_eq!(cli(&["optimize", "--elevation", "45", "--solver", "magic"]).code, EXIT_CONFIG);
    assert_eq!(cli(&["--config", "/nonexistent/run.toml", "calibrate"]).code, EXIT_CONFIG);
}

#[test]
fn out_of_range_elevation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_calibration(dir.path());
    assert_eq!(cli(&["--calibration", &cal, "link-budget", "--elevation", "-5"]).code, EXIT_CONFIG);
}

#[test]
fn unreachable_anchor_reports_calibration_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[anchors]\nsnr_db = 500.0\n").unwrap();
    let r = cli(&["--config", path_str(&cfg), "calibrate"]);
    assert_eq!(r.code, EXIT_CALIBRATION, "{}", r.stderr);
}

#[test]
fn insecure_link_reports_infeasible_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let cal = write_calibration(dir.path());
    // visibility 0.7 puts the QBER floor at 15%
    let text = std::fs::read_to_string(&cal).unwrap();
    let noisy: String = text
        .lines()
        .map(|l| if l.starts_with("effective_visibility") { "effective_visibility = 0.7".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&cal, noisy).unwrap();
    let trace = dir.path().join("trace.csv");
    let r = cli(&["--calibration", &cal, "optimize", "--elevation", "45", "--n", "4", "--trace", path_str(&trace)]);
    assert_eq!(r.code, EXIT_INFEASIBLE, "{}", r.stderr);
    assert!(r.stderr.contains("no feasible configuration"));
    assert_eq!(only_file_names(dir.path()), vec!["cal.toml"]);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_risqkd");
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("qubo-export"));
    let bad = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG));
    let ok = Command::new(bin).args(["link-budget", "--elevation", "45"]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("qber = "));
}

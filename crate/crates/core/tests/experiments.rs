use std::sync::OnceLock;

use risqkd::experiments::{
    calibrate, calibration_from_toml, calibration_to_toml, delta_metrics, evaluate_point, histogram_csv,
    phase_histogram, sweep_csv, sweep_elevation, write_atomic, Anchors, CsvMeta, RunConfig, Scenario, SweepRow,
    SweepSpec, HISTOGRAM_COLUMNS, SWEEP_COLUMNS,
};
use risqkd::metrics::Calibration;
use risqkd::Error;

fn calibrated() -> &'static (RunConfig, Calibration) {
    static CELL: OnceLock<(RunConfig, Calibration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = RunConfig::default();
        let cal = calibrate(&cfg).unwrap();
        (cfg, cal)
    })
}

fn small_sweep() -> RunConfig {
    let mut cfg = calibrated().0.clone();
    cfg.sweep = SweepSpec { elevations_deg: vec![20.0, 50.0, 80.0], ris_sizes: vec![0, 16, 64], ..Default::default() };
    cfg
}

#[test]
fn calibrated_baseline_reproduces_high_elevation_qber() {
    let (cfg, cal) = calibrated();
    let s = Scenario::build(cfg, cal, 80.0, 0, 0, 1.0).unwrap();
    assert!((s.baseline().qber - 0.009).abs() < 1e-8);
}

#[test]
fn calibration_without_surface_fits_the_first_three_steps() {
    let mut cfg = RunConfig::default();
    cfg.anchors.ris_elements = 0;
    let cal = calibrate(&cfg).unwrap();
    assert_eq!(cal.element_amp_scale, 1.0);
    let full = &calibrated().1;
    assert_eq!(cal.rf_gain_offset_db, full.rf_gain_offset_db);
    assert_eq!(cal.effective_visibility, full.effective_visibility);
    assert_eq!(cal.raw_rate_scale, full.raw_rate_scale);
}

#[test]
fn unreachable_anchor_is_a_calibration_failure() {
    let cfg = RunConfig { anchors: Anchors { snr_db: 500.0, ..Default::default() }, ..Default::default() };
    assert!(matches!(calibrate(&cfg), Err(Error::Calibration(_))));
}

fn high_elevation_pair() -> (SweepRow, SweepRow) {
    let (cfg, cal) = calibrated();
    (evaluate_point(cfg, cal, 80.0, 0, 0).unwrap(), evaluate_point(cfg, cal, 80.0, 512, 0).unwrap())
}

#[test]
fn large_surface_key_rate_at_high_elevation() {
    let (_, ris) = high_elevation_pair();
    assert!((ris.skr_bits_s - 7084.0).abs() <= 0.02 * 7084.0, "SKR {}", ris.skr_bits_s);
}

#[test]
fn large_surface_snr_gain_at_high_elevation() {
    let (base, ris) = high_elevation_pair();
    let deltas = delta_metrics(&[base, ris]).unwrap();
    assert_eq!((deltas[0].delta_snr_db, deltas[0].delta_qber_pp), (0.0, 0.0));
    assert!((deltas[1].delta_snr_db - 1.1).abs() <= 0.2, "dSNR {}", deltas[1].delta_snr_db);
}

#[test]
fn large_surface_qber_drop_at_high_elevation() {
    let (base, ris) = high_elevation_pair();
    let deltas = delta_metrics(&[base, ris]).unwrap();
    assert!((deltas[1].delta_qber_pp - 0.19).abs() <= 0.05, "dQBER {} pp", deltas[1].delta_qber_pp);
}

#[test]
fn sweep_has_one_row_per_point_in_order() {
    let cfg = small_sweep();
    let rows = sweep_elevation(&cfg, &calibrated().1).unwrap();
    assert_eq!(rows.len(), 9);
    let keys: Vec<(f64, usize)> = rows.iter().map(|r| (r.elevation_deg, r.n_elements)).collect();
    assert_eq!(keys[..4], [(20.0, 0), (20.0, 16), (20.0, 64), (50.0, 0)]);
    assert!(rows.iter().filter(|r| r.n_elements == 0).all(|r| r.solver_evals == 0));
    for e in [20.0, 50.0, 80.0] {
        let q: Vec<f64> = rows.iter().filter(|r| r.elevation_deg == e).map(|r| r.qber).collect();
        assert!(q[2] < q[1] && q[1] < q[0], "{q:?}");
    }
}

#[test]
fn repeated_trials_multiply_rows() {
    let mut cfg = small_sweep();
    cfg.sweep.trials = 2;
    cfg.sweep.fading = risqkd::experiments::FadingMode::Sampled;
    let rows = sweep_elevation(&cfg, &calibrated().1).unwrap();
    assert_eq!(rows.len(), 18);
    assert!(rows[..9].iter().all(|r| r.trial == 0) && rows[9..].iter().all(|r| r.trial == 1));
    assert_ne!(rows[0].qber, rows[9].qber);
}

#[test]
fn delta_metrics_needs_a_baseline() {
    let row = SweepRow {
        elevation_deg: 30.0,
        n_elements: 64,
        trial: 0,
        snr_db: 10.0,
        ber: 1e-3,
        qber: 0.01,
        skr_bits_s: 100.0,
        cost: -1.0,
        feasible: true,
        solver_evals: 5,
    };
    assert!(matches!(delta_metrics(&[row]), Err(Error::Structural(_))));
}

#[test]
fn csv_output_is_byte_identical_across_runs() {
    let cfg = small_sweep();
    let cal = calibrated().1;
    let render = || {
        let rows = sweep_elevation(&cfg, &cal).unwrap();
        let deltas = delta_metrics(&rows).unwrap();
        let meta = CsvMeta { kind: "sweep", seed: cfg.seed, solver: &cfg.solver, calibration: &cal, timestamp: false };
        sweep_csv(&rows, &deltas, &meta).unwrap()
    };
    let (a, b) = (render(), render());
    assert_eq!(a, b);
    let header = a.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, SWEEP_COLUMNS.join(","));
    assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 10);
    assert!(a.lines().any(|l| l.starts_with("# seed=2024")));
}

#[test]
fn histogram_counts_cover_the_surface() {
    let mut cfg = calibrated().0.clone();
    cfg.ris.n_elements = 64;
    cfg.anchors.ris_elements = 0;
    let cal = calibrated().1;
    let grids = phase_histogram(&cfg, &cal, &[1.0, 0.3]).unwrap();
    assert_eq!(grids.len(), 2);
    for g in &grids {
        assert!(g.feasible);
        assert_eq!(g.total(), 64);
        assert_eq!(g.counts.len(), 4);
        assert!(g.counts.iter().all(|r| r.len() == 4));
    }
    let meta = CsvMeta { kind: "histogram", seed: cfg.seed, solver: &cfg.solver, calibration: &cal, timestamp: false };
    let csv = histogram_csv(&grids, &meta);
    assert!(csv.lines().any(|l| l == HISTOGRAM_COLUMNS.join(",")));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 32);
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    assert!(matches!(RunConfig::from_toml_str("seed = 1\nbogus = 2\n"), Err(Error::Config(_))));
    assert!(matches!(RunConfig::from_toml_str("[rf]\nwavelength = 0.1\n"), Err(Error::Config(_))));
    assert!(matches!(
        RunConfig::from_toml_str("[sweep]\nelevations_deg = [10.0, 95.0]\n"),
        Err(Error::Config(_))
    ));
    assert!(matches!(RunConfig::from_toml_str("[ris]\nn_elements = 64\n"), Err(Error::Config(_))));
    let ok = RunConfig::from_toml_str("seed = 7\n[ris]\nn_elements = 64\n[anchors]\nris_elements = 64\n").unwrap();
    assert_eq!((ok.seed, ok.ris.n_elements), (7, 64));
}

#[test]
fn calibration_file_round_trips() {
    let cal = calibrated().1;
    assert_eq!(calibration_from_toml(&calibration_to_toml(&cal).unwrap()).unwrap(), cal);
    assert!(calibration_from_toml("raw_rate_scale = 1.0\n").is_err());
}

#[test]
fn atomic_write_leaves_no_temporaries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_atomic(&path, b"a,b\n1,2\n").unwrap();
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("sweep.csv")]);
}

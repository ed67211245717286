//! Calibration, sweeps, phase histograms and CSV output.

mod calibrate;
mod config;
mod histogram;
mod output;
mod scenario;
mod sweep;

pub use calibrate::{bisect, calibrate};
pub use config::{calibration_from_toml, calibration_to_toml, Anchors, FadingMode, RunConfig, SweepSpec};
pub use histogram::{chi_square_uniform, phase_histogram, HistogramGrid};
pub use output::{histogram_csv, sweep_csv, write_atomic, CsvMeta, HISTOGRAM_COLUMNS, SWEEP_COLUMNS};
pub use scenario::{fading_at, point_seed, Scenario, FADING_LABEL, SOLVER_LABEL};
pub use sweep::{delta_metrics, evaluate_point, sweep_elevation, DeltaRow, SweepRow};

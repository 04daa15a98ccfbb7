//! Run configuration: a JSON document merged with one-to-one CLI overrides.
//!
//! The file is the reproducible artifact — a run is fully determined by the
//! config plus the seed — and flags exist so one-off experiments don't need
//! a scratch file. Validation failures are *config* errors (exit code 2),
//! distinct from solver failures downstream.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use serde::Deserialize;
use udot_core::presets::{preset_names, preset_problem, PresetProblem};

/// Boundary-condition mode for the potential march.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcMode {
    /// March from a caller-prescribed left-endpoint slope.
    Initial,
    /// Left endpoint from the nested mass-matching condition (default for
    /// interval targets).
    Nested,
    /// Close the loop by shooting (default and only mode for periodic
    /// targets).
    PeriodicShooting,
}

impl BcMode {
    fn parse(s: &str) -> Option<BcMode> {
        match s {
            "initial" => Some(BcMode::Initial),
            "nested" => Some(BcMode::Nested),
            "periodic-shooting" => Some(BcMode::PeriodicShooting),
            _ => None,
        }
    }
}

impl fmt::Display for BcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcMode::Initial => "initial",
            BcMode::Nested => "nested",
            BcMode::PeriodicShooting => "periodic-shooting",
        })
    }
}

/// Verification thresholds; any violation makes `verify` exit with code 4.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Total-variation distance between the pushed-forward source and the
    /// target histogram.
    pub pushforward_tv: f64,
    /// Worst global-maximality deficit of the conjugate pair.
    pub nonlocal_deficit: f64,
    /// Worst relative error of the analytic map Jacobian against finite
    /// differences.
    pub jacobian_rel: f64,
    /// Duality gap of the marched potential against the exact discrete
    /// optimum.
    pub duality_gap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            pushforward_tv: 0.02,
            nonlocal_deficit: 1e-6,
            jacobian_rel: 1e-3,
            duality_gap: 1e-2,
        }
    }
}

/// Raw config file: everything optional so flags can fill the gaps.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    preset: Option<String>,
    cells: Option<usize>,
    ode_steps: Option<usize>,
    oracle_nx: Option<usize>,
    oracle_ny: Option<usize>,
    samples: Option<usize>,
    bins: Option<usize>,
    jacobian_samples: Option<usize>,
    nonlocal_samples: Option<usize>,
    levelset_count: Option<usize>,
    diag_y: Option<usize>,
    diag_p: Option<usize>,
    diag_q: Option<usize>,
    bc_mode: Option<String>,
    initial_slope: Option<f64>,
    convexify_coefficient: Option<f64>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    thresholds: Option<Thresholds>,
}

/// CLI-side overrides, one flag per config field.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub cells: Option<usize>,
    pub ode_steps: Option<usize>,
    pub oracle_nx: Option<usize>,
    pub oracle_ny: Option<usize>,
    pub samples: Option<usize>,
    pub bins: Option<usize>,
    pub jacobian_samples: Option<usize>,
    pub nonlocal_samples: Option<usize>,
    pub levelset_count: Option<usize>,
    pub diag_y: Option<usize>,
    pub diag_p: Option<usize>,
    pub diag_q: Option<usize>,
    pub bc_mode: Option<String>,
    pub initial_slope: Option<f64>,
    pub convexify_coefficient: Option<f64>,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: String,
    pub cells: usize,
    pub ode_steps: usize,
    pub oracle_nx: usize,
    pub oracle_ny: usize,
    pub samples: usize,
    pub bins: usize,
    pub jacobian_samples: usize,
    pub nonlocal_samples: usize,
    pub levelset_count: usize,
    pub diag_y: usize,
    pub diag_p: usize,
    pub diag_q: usize,
    pub bc_mode: BcMode,
    pub initial_slope: f64,
    pub convexify_coefficient: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub thresholds: Thresholds,
}

impl RunConfig {
    /// Load the optional file, apply overrides, fill defaults, validate.
    pub fn resolve(ov: &Overrides) -> Result<RunConfig, String> {
        let file = match &ov.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| format!("cannot parse config {}: {e}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let preset = ov
            .preset
            .clone()
            .or(file.preset)
            .ok_or_else(|| format!("no preset selected (choose one of {:?})", preset_names()))?;
        let reference = preset_problem(&preset)
            .ok_or_else(|| format!("unknown preset {preset:?} (choose one of {:?})", preset_names()))?;

        let bc_default = if reference.periodic() {
            BcMode::PeriodicShooting
        } else {
            BcMode::Nested
        };
        let bc_mode = match ov.bc_mode.clone().or(file.bc_mode) {
            Some(s) => BcMode::parse(&s)
                .ok_or_else(|| format!("unknown bc mode {s:?} (initial | nested | periodic-shooting)"))?,
            None => bc_default,
        };
        if reference.periodic() && bc_mode != BcMode::PeriodicShooting {
            return Err(format!(
                "preset {preset:?} has a periodic target; bc mode {bc_mode} is not applicable"
            ));
        }
        if !reference.periodic() && bc_mode == BcMode::PeriodicShooting {
            return Err(format!(
                "preset {preset:?} has an interval target; periodic shooting is not applicable"
            ));
        }

        let config = RunConfig {
            preset,
            cells: ov.cells.or(file.cells).unwrap_or(256),
            ode_steps: ov.ode_steps.or(file.ode_steps).unwrap_or(256),
            oracle_nx: ov.oracle_nx.or(file.oracle_nx).unwrap_or(30),
            oracle_ny: ov.oracle_ny.or(file.oracle_ny).unwrap_or(30),
            samples: ov.samples.or(file.samples).unwrap_or(100_000),
            bins: ov.bins.or(file.bins).unwrap_or(50),
            jacobian_samples: ov.jacobian_samples.or(file.jacobian_samples).unwrap_or(200),
            nonlocal_samples: ov.nonlocal_samples.or(file.nonlocal_samples).unwrap_or(500),
            levelset_count: ov.levelset_count.or(file.levelset_count).unwrap_or(9),
            diag_y: ov.diag_y.or(file.diag_y).unwrap_or(9),
            diag_p: ov.diag_p.or(file.diag_p).unwrap_or(5),
            diag_q: ov.diag_q.or(file.diag_q).unwrap_or(5),
            bc_mode,
            initial_slope: ov.initial_slope.or(file.initial_slope).unwrap_or(0.0),
            convexify_coefficient: ov
                .convexify_coefficient
                .or(file.convexify_coefficient)
                .unwrap_or(0.0),
            seed: ov.seed.or(file.seed).unwrap_or(0),
            out_dir: ov.out.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("out")),
            thresholds: file.thresholds.unwrap_or_default(),
        };

        for (label, value) in [
            ("cells", config.cells),
            ("ode_steps", config.ode_steps),
            ("oracle_nx", config.oracle_nx),
            ("oracle_ny", config.oracle_ny),
            ("samples", config.samples),
            ("bins", config.bins),
            ("jacobian_samples", config.jacobian_samples),
            ("nonlocal_samples", config.nonlocal_samples),
            ("levelset_count", config.levelset_count),
            ("diag_y", config.diag_y),
            ("diag_p", config.diag_p),
            ("diag_q", config.diag_q),
        ] {
            if value == 0 {
                return Err(format!("{label} must be positive"));
            }
        }
        if !config.initial_slope.is_finite() || !config.convexify_coefficient.is_finite() {
            return Err("initial_slope and convexify_coefficient must be finite".into());
        }
        Ok(config)
    }

    /// The preset, convexified when the config asks for it. The solve runs
    /// in the transformed frame; outputs are mapped back by the caller.
    pub fn build_preset(&self) -> PresetProblem {
        let preset = preset_problem(&self.preset).expect("validated at resolve time");
        if self.convexify_coefficient != 0.0 {
            preset.convexified(self.convexify_coefficient)
        } else {
            preset
        }
    }

    /// The untransformed preset, for verification and oracle runs that work
    /// in the original frame.
    pub fn build_plain_preset(&self) -> PresetProblem {
        preset_problem(&self.preset).expect("validated at resolve time")
    }
}

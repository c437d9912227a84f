//! Experiment harness for `nonlocal-core`: configuration, dispersal
//! sweeps, limit reports, steady-state profiles, plot scripts and the
//! verification suite behind the `nonlocal-spectra` binary.

pub mod config;
pub mod error;
pub mod limits;
pub mod plot;
pub mod profiles;
pub mod sweep;
pub mod verify;

use std::path::Path;

use nonlocal_core::operators::KernelMatrix;
use nonlocal_core::presets::Preset;
use nonlocal_core::{CoefficientSet, Grid};

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::{CliError, Result};

/// First line of every CSV artifact.
pub const CSV_MAGIC: &str = "# nonlocal-spectra v1";

/// Sampled coefficients with their grid and kernel matrix.
#[derive(Debug, Clone)]
pub struct Problem {
    pub label: String,
    pub grid: Grid,
    pub coefficients: CoefficientSet,
    pub kernel: KernelMatrix,
}

impl Problem {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        if !cfg.has_problem {
            return Err(CliError::config(
                "no coefficients: add a [coefficients] section or pass --preset <name>",
            ));
        }
        let grid = cfg.grid()?;
        let coefficients = cfg.coefficients.sample(&grid)?;
        coefficients.ensure_valid(&grid)?;
        let kernel = KernelMatrix::assemble(&coefficients.kernel, &grid);
        let label = match cfg.preset {
            Some(p) if cfg.coefficients == p.spec() => p.name().to_string(),
            Some(p) => format!("{}-modified", p.name()),
            None => "custom".to_string(),
        };
        Ok(Self {
            label,
            grid,
            coefficients,
            kernel,
        })
    }

    /// A preset on `n` midpoint nodes of `[0, 1]`.
    pub fn preset(p: Preset, n: usize) -> Result<Self> {
        let mut cfg = ExperimentConfig::for_preset(p);
        cfg.n = n;
        Self::new(&cfg)
    }
}

/// Shortest round-trip representation, so artifacts are reproducible and
/// lossless.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_artifact(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

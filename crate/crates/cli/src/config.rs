//! Run configuration: defaults, then a `key=value` file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sphere_fda::baseline::BaselineParams;
use sphere_fda::bundle::OptimizerOptions;
use sphere_fda::frechet::MeanOptions;
use sphere_fda::io::MIN_TRACK_POINTS;
use sphere_fda::simulate::SimulationParams;
use sphere_fda::warping::{AlignOptions, DpOptions};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub amplitude: bool,
    pub aligned: bool,
    pub baseline: Option<(usize, usize)>,
    /// `λ₁`, the tilt step.
    pub step: f64,
    /// `λ₂`, the base-point step of the mean.
    pub x_step: f64,
    pub tol: f64,
    pub x_tol: f64,
    pub max_iter: usize,
    pub max_rounds: usize,
    pub max_slope: usize,
    pub path_steps: usize,
    pub min_track_points: usize,
    pub means: usize,
    pub per_mean: usize,
    pub warp_strength: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimulationParams::default();
        Self {
            grid: 200,
            seed: 0,
            out: None,
            amplitude: false,
            aligned: false,
            baseline: None,
            step: 0.1,
            x_step: 0.1,
            tol: 1e-5,
            x_tol: 1e-5,
            max_iter: 200,
            max_rounds: 20,
            max_slope: DpOptions::default().max_slope,
            path_steps: 20,
            min_track_points: MIN_TRACK_POINTS,
            means: sim.n_means,
            per_mean: sim.per_mean,
            warp_strength: sim.warp_strength,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Validation(format!("config key {key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Validation(format!("config key {key}: expected a boolean, got {value:?}"))),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "grid" => self.grid = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "amplitude" => self.amplitude = parse_bool(key, value)?,
            "aligned" => self.aligned = parse_bool(key, value)?,
            "baseline" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                let [n, m] = parts.as_slice() else {
                    return Err(CliError::Validation("config key baseline: expected `N M`".into()));
                };
                self.baseline = Some((parse(key, n)?, parse(key, m)?));
            }
            "step" => self.step = parse(key, value)?,
            "x_step" => self.x_step = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "x_tol" => self.x_tol = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "max_rounds" => self.max_rounds = parse(key, value)?,
            "max_slope" => self.max_slope = parse(key, value)?,
            "path_steps" => self.path_steps = parse(key, value)?,
            "min_track_points" => self.min_track_points = parse(key, value)?,
            "means" => self.means = parse(key, value)?,
            "per_mean" => self.per_mean = parse(key, value)?,
            "warp_strength" => self.warp_strength = parse(key, value)?,
            _ => return Err(CliError::Validation(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` file. Blank lines and `#` comments are skipped.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut seen = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!("{}:{}: expected key=value", path.display(), k + 1)));
            };
            let key = key.trim();
            if seen.insert(key.to_string(), k + 1).is_some() {
                return Err(CliError::Validation(format!("{}:{}: duplicate key {key}", path.display(), k + 1)));
            }
            self.set(key, value.trim())
                .map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), k + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Validation(m.to_string()));
        if self.grid < 10 {
            return bad("grid must be at least 10");
        }
        let positive = [self.step, self.x_step, self.tol, self.x_tol];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("steps and tolerances must be positive");
        }
        if self.max_iter == 0 || self.max_rounds == 0 || self.path_steps == 0 || self.max_slope == 0 {
            return bad("iteration counts, path steps and max_slope must be positive");
        }
        if !(0.0..=0.95).contains(&self.warp_strength) {
            return bad("warp_strength must lie in [0, 0.95]");
        }
        if let Some((n, m)) = self.baseline {
            BaselineParams::new(n, m).map_err(|e| CliError::Validation(e.to_string()))?;
        }
        Ok(())
    }

    pub fn optimizer(&self) -> OptimizerOptions<f64> {
        OptimizerOptions { step: self.step, tol: self.tol, max_iter: self.max_iter, ..OptimizerOptions::default() }
    }

    pub fn dp(&self) -> DpOptions {
        DpOptions { max_slope: self.max_slope, ..DpOptions::default() }
    }

    pub fn align(&self) -> AlignOptions<f64> {
        AlignOptions { optimizer: self.optimizer(), dp: self.dp(), max_rounds: self.max_rounds }
    }

    pub fn mean(&self) -> MeanOptions<f64> {
        MeanOptions {
            theta: self.optimizer(),
            x_step: self.x_step,
            x_tol: self.x_tol,
            max_iter: self.max_iter,
            dp: self.dp(),
            max_rounds: self.max_rounds,
        }
    }

    pub fn simulation(&self) -> SimulationParams {
        SimulationParams {
            n_means: self.means,
            per_mean: self.per_mean,
            grid: self.grid,
            warp_strength: self.warp_strength,
            ..SimulationParams::default()
        }
    }
}

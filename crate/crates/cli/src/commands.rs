use std::path::{Path, PathBuf};

use serde::Serialize;
use sphere_fda::baseline::BaselineParams;
use sphere_fda::bundle::{geodesic_path, optimal_theta};
use sphere_fda::covariance::{pointwise_covariance, sample_covariance, transport_covariance_along_mean};
use sphere_fda::curves::warp_curve;
use sphere_fda::distance::{distance_matrix, improvement, Metric};
use sphere_fda::frechet::{frechet_mean_amplitude, frechet_mean_bundle};
use sphere_fda::io::{
    export_json, load_trajectory_csv, read_hurdat2, track_to_curve, write_trajectory_csv, write_warp_csv, Artifact,
    CovarianceJson, DistanceMatrixJson, GeodesicPathJson, MeanJson,
};
use sphere_fda::simulate::simulate_design;
use sphere_fda::Curve;

use crate::config::RunConfig;
use crate::{CliError, Outcome};

/// Loads every input. CSV files hold one trajectory; anything else is read
/// as HURDAT2 and contributes one curve per sufficiently long track.
fn load_curves(paths: &[PathBuf], cfg: &RunConfig) -> Result<(Vec<String>, Vec<Curve>), CliError> {
    let mut labels = Vec::new();
    let mut curves = Vec::new();
    for path in paths {
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv {
            curves.push(load_trajectory_csv(path, cfg.grid)?);
            labels.push(path.display().to_string());
            continue;
        }
        for track in read_hurdat2(path)? {
            match track_to_curve(&track, cfg.grid, cfg.min_track_points) {
                Ok(c) => {
                    curves.push(c);
                    labels.push(format!("{}:{}", path.display(), track.id));
                }
                Err(e) => log::warn!("skipping {}: {e}", track.id),
            }
        }
    }
    if curves.is_empty() {
        return Err(CliError::Validation("no usable curves in the inputs".into()));
    }
    Ok((labels, curves))
}

fn emit(artifact: &Artifact, cfg: &RunConfig) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => export_json(artifact, path)?,
        None => {
            let text = serde_json::to_string_pretty(artifact).map_err(|e| CliError::Validation(e.to_string()))?;
            println!("{text}");
        }
    }
    Ok(())
}

/// Short summary on stdout, or stderr when stdout carries the JSON.
fn report(cfg: &RunConfig, line: String) {
    if cfg.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

pub fn geodesic(a: &Path, b: &Path, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, mut curves) = load_curves(&[a.to_path_buf(), b.to_path_buf()], cfg)?;
    if curves.len() != 2 {
        return Err(CliError::Validation(format!("geodesic needs exactly two curves, got {}", curves.len())));
    }
    let p = curves.pop().unwrap();
    let p0 = curves.pop().unwrap();
    let (json, converged) = if cfg.amplitude {
        let fit = sphere_fda::warping::amplitude_geodesic(&p0, &p, &cfg.align())?;
        let warped = warp_curve(&p0, &fit.gamma_star)?;
        let path = geodesic_path(&warped, &p, fit.theta_star, cfg.path_steps)?;
        (GeodesicPathJson::new(&path, fit.dist_sq, Some(&fit.gamma_star), fit.converged), fit.converged)
    } else {
        let fit = optimal_theta(&p0, &p, &cfg.optimizer())?;
        let path = geodesic_path(&p0, &p, fit.theta, cfg.path_steps)?;
        (GeodesicPathJson::new(&path, fit.dist_sq, None, fit.converged), fit.converged)
    };
    report(cfg, format!("theta={} dist_sq={} converged={}", json.theta, json.dist_sq, converged));
    emit(&Artifact::GeodesicPath(json), cfg)?;
    Ok(Outcome::from_flag(converged))
}

pub fn mean(paths: &[PathBuf], cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, curves) = load_curves(paths, cfg)?;
    let result = if cfg.amplitude {
        frechet_mean_amplitude(&curves, &cfg.mean())?
    } else {
        frechet_mean_bundle(&curves, &cfg.mean())?
    };
    report(
        cfg,
        format!("frechet_value={} iterations={} converged={}", result.frechet_value, result.iterations, result.converged),
    );
    emit(&Artifact::Mean(MeanJson::new(&result)), cfg)?;
    Ok(Outcome::from_flag(result.converged))
}

pub fn distmat(paths: &[PathBuf], cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (labels, curves) = load_curves(paths, cfg)?;
    if curves.len() < 2 {
        return Err(CliError::Validation("distmat needs at least two curves".into()));
    }
    let opts = cfg.align();
    let (metric, name) = if cfg.amplitude { (Metric::Amplitude, "amplitude") } else { (Metric::Bundle, "bundle") };
    let exact = distance_matrix(&curves, metric, &opts)?;
    let mut converged = exact.all_converged;
    let (baseline, gain) = match cfg.baseline {
        Some((n, m)) => {
            let params = BaselineParams::new(n, m)?;
            let metric = if cfg.amplitude { Metric::BaselineAmplitude(params) } else { Metric::Baseline(params) };
            let base = distance_matrix(&curves, metric, &opts)?;
            converged &= base.all_converged;
            let gain = improvement(&exact, &base);
            let mean_gain = gain.iter().sum::<f64>() / gain.len() as f64;
            report(cfg, format!("mean_improvement_percent={mean_gain}"));
            (Some(base.rows()), Some(gain))
        }
        None => (None, None),
    };
    let json = DistanceMatrixJson {
        grid: sphere_fda::curves::uniform_grid(cfg.grid),
        labels,
        metric: name.into(),
        matrix: exact.rows(),
        baseline,
        improvement: gain,
    };
    emit(&Artifact::DistanceMatrix(json), cfg)?;
    Ok(Outcome::from_flag(converged))
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    mean: usize,
    gamma: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    means: Vec<String>,
    curves: Vec<ManifestEntry>,
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = cfg.out.as_ref().ok_or_else(|| CliError::Validation("simulate needs --out DIR".into()))?;
    let set = simulate_design::<f64>(&cfg.simulation(), cfg.seed, &cfg.optimizer())?;
    for sub in ["means", "curves"] {
        create_dir(&out.join(sub))?;
    }
    let mut means = Vec::new();
    for (m, c) in set.means.iter().enumerate() {
        let name = format!("means/mean_{m:02}.csv");
        write_trajectory_csv(c, out.join(&name))?;
        means.push(name);
    }
    if set.warps.is_some() {
        create_dir(&out.join("warps"))?;
    }
    let mut curves = Vec::new();
    for (i, (c, &label)) in set.curves.iter().zip(&set.labels).enumerate() {
        let file = format!("curves/curve_{i:03}.csv");
        write_trajectory_csv(c, out.join(&file))?;
        let gamma = match &set.warps {
            Some(w) => {
                let name = format!("warps/gamma_{i:03}.csv");
                write_warp_csv(&w[i], out.join(&name))?;
                Some(name)
            }
            None => None,
        };
        curves.push(ManifestEntry { file, mean: label, gamma });
    }
    let manifest = Manifest { config: cfg, means, curves };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Validation(e.to_string()))?;
    let path = out.join("manifest.json");
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {} curves to {}", set.curves.len(), out.display());
    Ok(Outcome::Converged)
}

pub fn covariance(paths: &[PathBuf], cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (_, curves) = load_curves(paths, cfg)?;
    if curves.len() < 2 {
        return Err(CliError::Validation("covariance needs at least two curves".into()));
    }
    let mean = if cfg.aligned {
        frechet_mean_amplitude(&curves, &cfg.mean())?
    } else {
        frechet_mean_bundle(&curves, &cfg.mean())?
    };
    let opts = cfg.optimizer();
    let inputs = if cfg.aligned { mean.aligned.as_deref().unwrap_or(&curves) } else { &curves };
    let blocks = sample_covariance(inputs, &mean.mean_tsrvc, &opts)?;
    let pointwise = pointwise_covariance(&curves, &mean, cfg.aligned, &opts)?;
    let along = transport_covariance_along_mean(&pointwise, &mean.mean)?;
    let json = CovarianceJson::new(&blocks, Some(&pointwise), Some(&along));
    let mean_trace = json.pointwise.as_ref().map_or(0.0, |p| p.trace.iter().sum::<f64>() / p.trace.len() as f64);
    report(cfg, format!("mean_trace={mean_trace} min_eigenvalue={} converged={}", json.min_eigenvalue, mean.converged));
    emit(&Artifact::Covariance(json), cfg)?;
    Ok(Outcome::from_flag(mean.converged))
}

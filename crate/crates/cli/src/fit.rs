use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use xmf_core::io::{read_camera, read_matches, write_model, ModelFile};
use xmf_core::robust::{fit_bspline_sgd, ransac, BSplineConfig, ModelKind, RansacConfig};
use xmf_core::{Correspondence, TransformKind};

use crate::context::{require_file, CliError, RunContext};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Match file (JSON Lines or binary).
    #[arg(long)]
    matches: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Camera files for the essential model.
    #[arg(long)]
    camera0: Option<PathBuf>,
    #[arg(long)]
    camera1: Option<PathBuf>,
    #[command(flatten)]
    params: FitOverrides,
}

#[derive(Debug, Args, Serialize)]
struct FitOverrides {
    #[arg(long, value_parser = ["affine", "homography", "fundamental", "essential", "bspline"])]
    model: Option<String>,
    /// Inlier threshold; defaults depend on the model.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    confidence: Option<f64>,
    /// B-spline control grid side.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// B-spline domain `W,H`; defaults to the right image size in the match header.
    #[arg(long, value_delimiter = ',')]
    extent: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitParams {
    model: String,
    threshold: Option<f64>,
    max_iterations: usize,
    confidence: f64,
    grid: usize,
    learning_rate: f64,
    iterations: usize,
    extent: Option<Vec<f64>>,
}

pub fn run(ctx: &RunContext, a: &FitArgs) -> Result<(), CliError> {
    let d = BSplineConfig::default();
    let p: FitParams = ctx.resolve(
        "fit",
        FitParams {
            model: "homography".into(),
            threshold: None,
            max_iterations: 1000,
            confidence: 0.99999,
            grid: d.grid.0,
            learning_rate: d.learning_rate,
            iterations: d.iterations,
            extent: None,
        },
        &a.params,
    )?;
    let bspline = p.model == "bspline";
    let kind: ModelKind = if bspline {
        ModelKind::Affine
    } else {
        serde_json::from_value(serde_json::Value::String(p.model.clone()))
            .map_err(|_| CliError::Usage(format!("unknown model {:?}", p.model)))?
    };
    let cfg = RansacConfig {
        max_iterations: p.max_iterations,
        confidence: p.confidence,
        inlier_threshold: p.threshold.unwrap_or(kind.default_threshold()),
        seed: ctx.seed,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let intrinsics = match (kind, &a.camera0, &a.camera1) {
        (ModelKind::Essential, Some(c0), Some(c1)) => Some((read_camera(c0)?.0, read_camera(c1)?.0)),
        (ModelKind::Essential, _, _) => return Err(CliError::Usage("essential model needs --camera0 and --camera1".into())),
        _ => None,
    };
    require_file(&a.matches)?;
    let (header, matches) = read_matches(&a.matches)?;
    let fit = ransac(&matches, kind, &cfg, intrinsics.as_ref().map(|(k0, k1)| (k0, k1)))
        .map_err(|e| CliError::NoResult(format!("{}: {e}", a.matches.display())))?;
    let prov = ctx.provenance(&p);
    let mut model = if bspline {
        let extent = match (&p.extent, &header) {
            (Some(e), _) if e.len() == 2 => (e[0], e[1]),
            (Some(_), _) => return Err(CliError::Usage("--extent takes W,H".into())),
            (None, Some(h)) if h.width1 > 0 && h.height1 > 0 => (h.width1 as f64, h.height1 as f64),
            (None, _) => return Err(CliError::Usage("bspline needs --extent or sized match header".into())),
        };
        let affine = fit.model.as_planar().filter(|t| t.kind() != TransformKind::Homography).ok_or_else(|| {
            CliError::NoResult("affine initialization failed".into())
        })?;
        let inliers: Vec<Correspondence> = fit.inlier_indices.iter().map(|&i| matches[i]).collect();
        let bcfg = BSplineConfig {
            grid: (p.grid, p.grid),
            learning_rate: p.learning_rate,
            iterations: p.iterations,
            ..d
        };
        let refined = fit_bspline_sgd(&inliers, affine, extent, &bcfg).map_err(|e| CliError::NoResult(e.to_string()))?;
        println!(
            "fit bspline: {} inliers, mean error {:.4} -> {:.4} px",
            inliers.len(),
            refined.initial_mean_error,
            refined.final_mean_error
        );
        ModelFile::from_bspline(&refined, fit.inlier_indices.clone())
    } else {
        println!(
            "fit {}: {} / {} inliers after {} iterations",
            p.model,
            fit.inlier_indices.len(),
            matches.len(),
            fit.iterations_run
        );
        ModelFile::from_fit(kind, &fit)
    };
    model.provenance = Some(prov);
    write_model(&a.out, &model)?;
    Ok(())
}

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use xmf_core::eval::{emit_report, run_protocol, EvalConfig, EvalError, MetricReport, Protocol};
use xmf_core::robust::BSplineConfig;

use crate::context::{io_err, require_dir, require_file, CliError, RunContext};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Evaluation manifest (JSON Lines).
    #[arg(long)]
    manifest: PathBuf,
    /// Directory of `<pair_id>.jsonl` / `<pair_id>.xmf` predictions.
    #[arg(long)]
    predictions: PathBuf,
    /// Report JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Curve CSV path; defaults to the report path with a `.csv` extension.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[command(flatten)]
    params: EvalOverrides,
}

#[derive(Debug, Args, Serialize)]
struct EvalOverrides {
    #[arg(long, value_parser = ["warp_affine", "warp_homography", "rtre_bspline", "pose_essential"])]
    protocol: Option<String>,
    /// Comma-separated thresholds (pixels, degrees or rTRE).
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long)]
    inlier_threshold: Option<f64>,
    #[arg(long)]
    bspline_grid: Option<usize>,
    #[arg(long)]
    bspline_learning_rate: Option<f64>,
    #[arg(long)]
    bspline_iterations: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalParams {
    protocol: Option<String>,
    thresholds: Option<Vec<f64>>,
    max_iterations: usize,
    confidence: f64,
    inlier_threshold: Option<f64>,
    bspline_grid: usize,
    bspline_learning_rate: f64,
    bspline_iterations: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON written by `eval`.
    #[arg(long)]
    input: PathBuf,
    /// Re-aggregate the stored samples at these thresholds.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Write the (re-aggregated) report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Curve CSV path, used with `--out`.
    #[arg(long)]
    curve: Option<PathBuf>,
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Io(e) => e.into(),
        EvalError::ManifestInvalid(m) => CliError::Io(format!("invalid manifest: {m}")),
        other => CliError::Usage(other.to_string()),
    }
}

fn print_summary(r: &MetricReport) {
    println!("{}: {} pairs, {} failed", r.protocol, r.pairs, r.failed);
    for (sr, auc) in r.success_rate.iter().zip(&r.auc) {
        println!("SR@{} = {}  AUC@{} = {}", sr.threshold, sr.value, auc.threshold, auc.value);
    }
    if let Some(a) = &r.rtre {
        println!(
            "Average-ArTRE = {}  Median-ArTRE = {}  Average-MrTRE = {}  Median-MrTRE = {}",
            a.average_artre, a.median_artre, a.average_mrtre, a.median_mrtre
        );
    }
}

fn curve_path(out: &std::path::Path, curve: &Option<PathBuf>) -> PathBuf {
    curve.clone().unwrap_or_else(|| out.with_extension("csv"))
}

pub fn run_eval(ctx: &RunContext, a: &EvalArgs) -> Result<(), CliError> {
    let d = BSplineConfig::default();
    let p: EvalParams = ctx.resolve(
        "eval",
        EvalParams {
            protocol: None,
            thresholds: None,
            max_iterations: 1000,
            confidence: 0.99999,
            inlier_threshold: None,
            bspline_grid: d.grid.0,
            bspline_learning_rate: d.learning_rate,
            bspline_iterations: d.iterations,
        },
        &a.params,
    )?;
    let protocol: Protocol = p
        .protocol
        .as_deref()
        .ok_or_else(|| CliError::Usage("--protocol is required".into()))?
        .parse()
        .map_err(CliError::Usage)?;
    let mut cfg = EvalConfig::new(protocol);
    if let Some(t) = &p.thresholds {
        cfg.thresholds = t.clone();
    }
    cfg.seed = ctx.seed;
    cfg.max_iterations = p.max_iterations;
    cfg.confidence = p.confidence;
    cfg.inlier_threshold = p.inlier_threshold;
    cfg.bspline = BSplineConfig {
        grid: (p.bspline_grid, p.bspline_grid),
        learning_rate: p.bspline_learning_rate,
        iterations: p.bspline_iterations,
        ..d
    };
    require_file(&a.manifest)?;
    require_dir(&a.predictions)?;
    let mut report = run_protocol(&a.manifest, &a.predictions, &cfg).map_err(eval_error)?;
    report.provenance = Some(ctx.provenance(&p));
    emit_report(&report, &a.out, &curve_path(&a.out, &a.curve)).map_err(eval_error)?;
    print_summary(&report);
    if report.failed == report.pairs {
        return Err(CliError::NoResult("every pair failed".into()));
    }
    Ok(())
}

pub fn run_report(a: &ReportArgs) -> Result<(), CliError> {
    require_file(&a.input)?;
    let text = std::fs::read_to_string(&a.input).map_err(|e| io_err(&a.input, e))?;
    let mut report: MetricReport = serde_json::from_str(&text).map_err(|e| io_err(&a.input, e))?;
    if let Some(t) = &a.thresholds {
        let protocol: Protocol = report.protocol.parse().map_err(CliError::Io)?;
        let mut rebuilt = MetricReport::build(
            &report.protocol,
            report.error_kind,
            report.samples.clone(),
            t,
            protocol.curve_step(),
            report.config.clone(),
        )
        .map_err(eval_error)?;
        rebuilt.provenance = report.provenance.take();
        report = rebuilt;
    }
    print_summary(&report);
    if let Some(out) = &a.out {
        emit_report(&report, out, &curve_path(out, &a.curve)).map_err(eval_error)?;
    }
    Ok(())
}

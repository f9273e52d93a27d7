use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use xmf_core::geometry::GtThresholds;
use xmf_core::io::{
    read_depth, read_image, read_matches, read_pair_manifest, read_scene_dir, write_image_png, write_mask_png,
    write_matches_jsonl, write_pair_manifest, MatchHeader, PairGtKind, PairManifestRecord, Provenance,
};
use xmf_core::seed::derive_seed;
use xmf_core::synth::{
    apply_modality, make_depth_pair, make_warp_pair, Auxiliary, DepthPairConfig, EvalWarpPreset, HomographySampleRanges,
    Interval, ModalityGenerator, PairProvenance, Side, SynthError, SynthesizedPair, WarpSampler,
};
use xmf_core::{Image, Mask, PlanarTransform, TransformKind};

use crate::context::{io_err, require_dir, require_file, CliError, RunContext};

#[derive(Debug, Subcommand)]
pub enum SynthCmd {
    /// Warp single images with sampled homographies or similarities.
    WarpPairs(WarpPairsArgs),
    /// Mine posed views of a scene directory for overlapping pairs.
    DepthPairs(DepthPairsArgs),
    /// Substitute one side of every pair in a manifest with another modality.
    Modality(ModalityArgs),
    /// Write a procedural demo fixture.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// plane-box (scene directory) | video (pair match files) | pose | warp (evaluation sets)
    #[arg(long, value_parser = ["plane-box", "video", "pose", "warp"])]
    kind: String,
    #[arg(long)]
    out: PathBuf,
    /// Number of views, frames or pairs.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WarpPairsArgs {
    /// Directory of PNG images.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Depth maps named after the images (`<stem>.pfm`), used with `--sky-mask`.
    #[arg(long)]
    depth_dir: Option<PathBuf>,
    #[command(flatten)]
    params: WarpOverrides,
}

#[derive(Debug, Args, Serialize)]
struct WarpOverrides {
    /// train (homography) | medical | map (similarity)
    #[arg(long, value_parser = ["train", "medical", "map"])]
    preset: Option<String>,
    #[arg(long)]
    grid_step: Option<u32>,
    #[arg(long)]
    pairs_per_image: Option<usize>,
    /// Restrict supervision to pixels with positive depth.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    sky_mask: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WarpParams {
    preset: String,
    grid_step: u32,
    pairs_per_image: usize,
    sky_mask: bool,
}

#[derive(Debug, Args)]
pub struct DepthPairsArgs {
    /// Scene directory of `<id>.json` cameras, `<id>.pfm` depths and `<id>.png` images.
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: DepthOverrides,
}

#[derive(Debug, Args, Serialize)]
struct DepthOverrides {
    #[arg(long)]
    overlap_min: Option<f64>,
    #[arg(long)]
    overlap_max: Option<f64>,
    #[arg(long)]
    grid_step: Option<u32>,
    #[arg(long)]
    max_depth_error: Option<f64>,
    #[arg(long)]
    max_cycle_error: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DepthParams {
    overlap_min: f64,
    overlap_max: f64,
    grid_step: u32,
    max_depth_error: f64,
    max_cycle_error: f64,
}

#[derive(Debug, Args)]
pub struct ModalityArgs {
    /// Pair manifest written by `warp-pairs` or `depth-pairs`.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Aligned auxiliaries named after the replaced image (`<stem>.pfm` or `<stem>.png`).
    #[arg(long)]
    aux_dir: Option<PathBuf>,
    #[command(flatten)]
    params: ModalityOverrides,
}

#[derive(Debug, Args, Serialize)]
struct ModalityOverrides {
    #[arg(long, value_parser = ["invert", "remap", "depth", "external"])]
    generator: Option<String>,
    #[arg(long, value_parser = ["left", "right"])]
    side: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModalityParams {
    generator: String,
    side: String,
}

pub fn run(ctx: &RunContext, cmd: &SynthCmd) -> Result<(), CliError> {
    match cmd {
        SynthCmd::WarpPairs(a) => warp_pairs(ctx, a),
        SynthCmd::DepthPairs(a) => depth_pairs(ctx, a),
        SynthCmd::Modality(a) => modality(ctx, a),
        SynthCmd::Fixture(a) => fixture(ctx, a),
    }
}

fn manifest_header(mode: &str, prov: &Provenance) -> Value {
    json!({"type": "manifest_header", "mode": mode, "provenance": prov})
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .collect();
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes images, mask and matches of one pair under `out` and returns the
/// manifest record.
fn write_pair(
    out: &Path,
    pair_id: &str,
    pair: &SynthesizedPair,
    prov: &Provenance,
    seed: u64,
) -> Result<PairManifestRecord, CliError> {
    let left = format!("images/{pair_id}_0.png");
    let right = format!("images/{pair_id}_1.png");
    let mask = format!("masks/{pair_id}.png");
    let matches = format!("matches/{pair_id}.jsonl");
    write_image_png(&out.join(&left), &pair.left)?;
    write_image_png(&out.join(&right), &pair.right)?;
    write_mask_png(&out.join(&mask), &pair.valid_mask)?;
    let mut header = MatchHeader::new(
        left.clone(),
        right.clone(),
        (pair.left.width(), pair.left.height()),
        (pair.right.width(), pair.right.height()),
    );
    header.provenance = Some(prov.clone());
    write_matches_jsonl(&out.join(&matches), &header, &pair.matches)?;
    let (gt_kind, gt) = match &pair.transform {
        Some(t) => (PairGtKind::Homography, json!(t.to_row_major())),
        None => (PairGtKind::Matches, json!(matches)),
    };
    Ok(PairManifestRecord {
        pair_id: pair_id.to_string(),
        left_path: left,
        right_path: right,
        gt_kind,
        gt,
        matches_path: Some(matches),
        mask_path: Some(mask),
        modalities: [pair.modality_tags.0.clone(), pair.modality_tags.1.clone()],
        seed,
        source: pair.provenance.source.clone(),
    })
}

/// Collects per-item outcomes in order, logging failures.
fn finish_batch(
    mode: &str,
    out: &Path,
    prov: &Provenance,
    results: Vec<(String, Result<Option<PairManifestRecord>, CliError>)>,
) -> Result<(usize, usize, usize), CliError> {
    let mut records = Vec::new();
    let (mut failed, mut skipped) = (0, 0);
    for (id, r) in results {
        match r {
            Ok(Some(rec)) => records.push(rec),
            Ok(None) => skipped += 1,
            Err(e) => {
                log::warn!("{id}: {e}");
                failed += 1;
            }
        }
    }
    write_pair_manifest(&out.join("manifest.jsonl"), Some(&manifest_header(mode, prov)), &records)?;
    Ok((records.len(), skipped, failed))
}

fn warp_pairs(ctx: &RunContext, a: &WarpPairsArgs) -> Result<(), CliError> {
    let p: WarpParams = ctx.resolve(
        "synth_warp_pairs",
        WarpParams { preset: "train".into(), grid_step: 8, pairs_per_image: 1, sky_mask: false },
        &a.params,
    )?;
    let sampler = match p.preset.as_str() {
        "train" => WarpSampler::Homography(HomographySampleRanges::training()),
        "medical" => WarpSampler::Similarity(EvalWarpPreset::medical()),
        "map" => WarpSampler::Similarity(EvalWarpPreset::map()),
        other => return Err(CliError::Usage(format!("unknown preset {other:?}"))),
    };
    if p.grid_step == 0 {
        return Err(CliError::Usage("grid_step must be >= 1".into()));
    }
    if p.sky_mask && a.depth_dir.is_none() {
        return Err(CliError::Usage("--sky-mask needs --depth-dir".into()));
    }
    require_dir(&a.input)?;
    if let Some(d) = &a.depth_dir {
        require_dir(d)?;
    }
    let images = sorted_files(&a.input, "png")?;
    let prov = ctx.provenance(&p);
    let items: Vec<(usize, &PathBuf, usize)> = images
        .iter()
        .enumerate()
        .flat_map(|(i, path)| (0..p.pairs_per_image).map(move |k| (i * p.pairs_per_image + k, path, k)))
        .collect();
    let results: Vec<(String, Result<Option<PairManifestRecord>, CliError>)> = items
        .par_iter()
        .map(|&(index, path, k)| {
            let id = format!("{}_{k:02}", stem(path));
            let seed = derive_seed(ctx.seed, index as u64);
            let r = (|| {
                let img = read_image(path)?;
                let depth = match (&a.depth_dir, p.sky_mask) {
                    (Some(d), true) => Some(read_depth(&d.join(format!("{}.pfm", stem(path))))?),
                    _ => None,
                };
                let source = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let pair = make_warp_pair(&img, &sampler, p.grid_step, seed, depth.as_ref(), &source)
                    .map_err(|e| CliError::NoResult(e.to_string()))?;
                write_pair(&a.out, &id, &pair, &prov, seed).map(Some)
            })();
            (id, r)
        })
        .collect();
    let (n, _, failed) = finish_batch("warp-pairs", &a.out, &prov, results)?;
    println!("warp-pairs: {n} pairs written, {failed} failed");
    Ok(())
}

#[derive(Serialize)]
struct OverlapRecord<'a> {
    left: &'a str,
    right: &'a str,
    overlap: f64,
    accepted: bool,
}

fn depth_pairs(ctx: &RunContext, a: &DepthPairsArgs) -> Result<(), CliError> {
    let p: DepthParams = ctx.resolve(
        "synth_depth_pairs",
        DepthParams { overlap_min: 0.1, overlap_max: 0.7, grid_step: 8, max_depth_error: 0.05, max_cycle_error: 3.0 },
        &a.params,
    )?;
    let overlap = Interval::new(p.overlap_min, p.overlap_max).map_err(|e| CliError::Usage(format!("overlap: {e}")))?;
    if p.grid_step == 0 || !(p.max_depth_error > 0.0) || !(p.max_cycle_error > 0.0) {
        return Err(CliError::Usage("grid step and gates must be positive".into()));
    }
    require_dir(&a.scene)?;
    let views = read_scene_dir(&a.scene)?;
    let cfg = DepthPairConfig {
        thresholds: GtThresholds { max_depth_error: p.max_depth_error, max_cycle_error: p.max_cycle_error },
        overlap,
        grid_step: p.grid_step,
    };
    let prov = ctx.provenance(&p);
    let pairs: Vec<(usize, usize)> =
        (0..views.len()).flat_map(|i| (i + 1..views.len()).map(move |j| (i, j))).collect();
    let outcomes: Vec<(String, Option<f64>, Result<Option<PairManifestRecord>, CliError>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (l, r) = (&views[i], &views[j]);
            let id = format!("{}__{}", l.id, r.id);
            match make_depth_pair(l, r, &cfg) {
                Ok(mut pair) => {
                    pair.provenance.seed = ctx.seed;
                    let ratio = pair.provenance.overlap;
                    (id.clone(), ratio, write_pair(&a.out, &id, &pair, &prov, ctx.seed).map(Some))
                }
                Err(SynthError::NoOverlap { ratio }) => (id, Some(ratio), Ok(None)),
                Err(e) => (id, None, Err(CliError::NoResult(e.to_string()))),
            }
        })
        .collect();
    let log: Vec<OverlapRecord> = pairs
        .iter()
        .zip(&outcomes)
        .filter_map(|(&(i, j), (_, ratio, r))| {
            Some(OverlapRecord {
                left: &views[i].id,
                right: &views[j].id,
                overlap: (*ratio)?,
                accepted: matches!(r, Ok(Some(_))),
            })
        })
        .collect();
    xmf_core::io::write_jsonl(&a.out.join("overlaps.jsonl"), Some(&manifest_header("depth-pairs", &prov)), &log)?;
    let results = outcomes.into_iter().map(|(id, _, r)| (id, r)).collect();
    let (n, skipped, failed) = finish_batch("depth-pairs", &a.out, &prov, results)?;
    println!("depth-pairs: {n} pairs written, {skipped} outside overlap range, {failed} failed");
    Ok(())
}

fn read_mask(path: &Path) -> Result<Mask, CliError> {
    let img = read_image(path)?;
    Ok(Mask::from_fn(img.width(), img.height(), |x, y| img.pixel(x, y)[0] > 127.5))
}

fn modality(ctx: &RunContext, a: &ModalityArgs) -> Result<(), CliError> {
    let p: ModalityParams =
        ctx.resolve("synth_modality", ModalityParams { generator: "invert".into(), side: "right".into() }, &a.params)?;
    let gen = match p.generator.as_str() {
        "invert" => ModalityGenerator::invert(),
        "remap" => ModalityGenerator::remap(),
        "depth" => ModalityGenerator::depth(),
        "external" => ModalityGenerator::external("external"),
        other => return Err(CliError::Usage(format!("unknown generator {other:?}"))),
    };
    let side = match p.side.as_str() {
        "left" => Side::Left,
        "right" => Side::Right,
        other => return Err(CliError::Usage(format!("unknown side {other:?}"))),
    };
    if matches!(p.generator.as_str(), "depth" | "external") && a.aux_dir.is_none() {
        return Err(CliError::Usage(format!("generator {} needs --aux-dir", p.generator)));
    }
    require_file(&a.manifest)?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let records = read_pair_manifest(&a.manifest)?;
    let prov = ctx.provenance(&p);
    let results: Vec<(String, Result<Option<PairManifestRecord>, CliError>)> = records
        .par_iter()
        .map(|rec| {
            let r = (|| {
                let left = read_image(&base.join(&rec.left_path))?;
                let right = read_image(&base.join(&rec.right_path))?;
                let matches = match &rec.matches_path {
                    Some(m) => read_matches(&base.join(m))?.1,
                    None => Vec::new(),
                };
                let valid_mask = match &rec.mask_path {
                    Some(m) => read_mask(&base.join(m))?,
                    None => Mask::filled(left.width(), left.height(), true),
                };
                let transform = match rec.gt_kind {
                    PairGtKind::Homography => {
                        let m: [f64; 9] = serde_json::from_value(rec.gt.clone())
                            .map_err(|e| CliError::Io(format!("{}: {e}", rec.pair_id)))?;
                        Some(
                            PlanarTransform::from_row_major(TransformKind::Homography, &m)
                                .map_err(|e| CliError::Io(format!("{}: {e}", rec.pair_id)))?,
                        )
                    }
                    PairGtKind::Matches => None,
                };
                let pair = SynthesizedPair {
                    left,
                    right,
                    transform,
                    matches,
                    valid_mask,
                    modality_tags: (rec.modalities[0].clone(), rec.modalities[1].clone()),
                    provenance: PairProvenance {
                        seed: rec.seed,
                        source: rec.source.clone(),
                        recipe: String::new(),
                        draw: None,
                        overlap: None,
                    },
                };
                let replaced = match side {
                    Side::Left => &rec.left_path,
                    Side::Right => &rec.right_path,
                };
                let aux_stem = stem(Path::new(replaced));
                let depth;
                let image: Image;
                let aux = match (p.generator.as_str(), &a.aux_dir) {
                    ("depth", Some(d)) => {
                        depth = read_depth(&d.join(format!("{aux_stem}.pfm")))?;
                        Some(Auxiliary::Depth(&depth))
                    }
                    ("external", Some(d)) => {
                        image = read_image(&d.join(format!("{aux_stem}.png")))?;
                        Some(Auxiliary::Image(&image))
                    }
                    _ => None,
                };
                let out = apply_modality(&pair, &gen, side, aux).map_err(|e| CliError::NoResult(e.to_string()))?;
                write_pair(&a.out, &rec.pair_id, &out, &prov, rec.seed).map(Some)
            })();
            (rec.pair_id.clone(), r)
        })
        .collect();
    let (n, _, failed) = finish_batch("modality", &a.out, &prov, results)?;
    println!("modality: {n} pairs written, {failed} failed");
    Ok(())
}

fn fixture(ctx: &RunContext, a: &FixtureArgs) -> Result<(), CliError> {
    use xmf_core::synthetic::{
        planar_video, write_pose_fixture, write_video_matches, write_warp_fixture, PlaneBoxScene, PlanarVideoConfig,
    };
    match a.kind.as_str() {
        "plane-box" => {
            for v in PlaneBoxScene::default().views(a.count.unwrap_or(5), 1.5) {
                xmf_core::io::write_scene_view(&a.out, &v)?;
            }
        }
        "video" => {
            let cfg = PlanarVideoConfig { frames: a.count.unwrap_or(50), ..Default::default() };
            write_video_matches(&a.out, &planar_video(&cfg, ctx.seed))?;
        }
        "pose" => {
            write_pose_fixture(&a.out, a.count.unwrap_or(50), ctx.seed, 0.5)?;
        }
        "warp" => {
            write_warp_fixture(&a.out, a.count.unwrap_or(10), ctx.seed, &[])?;
        }
        other => return Err(CliError::Usage(format!("unknown fixture {other:?}"))),
    }
    println!("fixture {}: written to {}", a.kind, a.out.display());
    Ok(())
}

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use xmf_core::io::{read_matches, read_tracks, write_jsonl, write_matches_jsonl, write_tracks, MatchHeader};
use xmf_core::seed::derive_seed;
use xmf_core::tracks::{
    aggregate, geometric_verify, refine_tracks, sample_matches, select_training_pairs, PairMatches, Refiner,
    SelectionConfig, TrainingPairRecord,
};

use crate::context::{io_err, require_dir, require_file, CliError, RunContext};

#[derive(Debug, Subcommand)]
pub enum TracksCmd {
    /// Merge pairwise video matches into tracks.
    Build(BuildArgs),
    /// Pick training frame pairs from a track file.
    SelectPairs(SelectArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Directory of match files named `<frame>_<frame>.jsonl` (or `.xmf`).
    #[arg(long)]
    matches: PathBuf,
    /// Output track file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-frame anchors.
    #[arg(long)]
    anchors_out: Option<PathBuf>,
    #[command(flatten)]
    params: BuildOverrides,
}

#[derive(Debug, Args, Serialize)]
struct BuildOverrides {
    /// NMS window side in pixels (odd).
    #[arg(long)]
    window: Option<u32>,
    #[arg(long, value_parser = ["identity", "centroid", "external"])]
    refiner: Option<String>,
    /// Command for the external refiner; input and output paths are appended.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    refiner_cmd: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildParams {
    window: u32,
    refiner: String,
    refiner_cmd: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    tracks: PathBuf,
    /// Output pair list; match files go to a `pairs/` directory beside it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: SelectOverrides,
}

#[derive(Debug, Args, Serialize)]
struct SelectOverrides {
    /// far (gap 20, covisible 300, motion 30 px) | near (gap 10, covisible 300)
    #[arg(long, value_parser = ["far", "near"])]
    preset: Option<String>,
    #[arg(long)]
    min_gap: Option<u32>,
    #[arg(long)]
    min_covisible: Option<usize>,
    #[arg(long)]
    min_motion: Option<f64>,
    /// Keep at most this many spatially spread matches per pair (0 keeps all).
    #[arg(long)]
    sample: Option<usize>,
    /// Bin size for spatial sampling.
    #[arg(long)]
    cell: Option<f64>,
    /// Sampson threshold for fundamental-matrix verification (0 disables).
    #[arg(long)]
    verify_threshold: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectParams {
    preset: String,
    min_gap: Option<u32>,
    min_covisible: Option<usize>,
    min_motion: Option<f64>,
    sample: usize,
    cell: f64,
    verify_threshold: f64,
}

pub fn run(ctx: &RunContext, cmd: &TracksCmd) -> Result<(), CliError> {
    match cmd {
        TracksCmd::Build(a) => build(ctx, a),
        TracksCmd::SelectPairs(a) => select(ctx, a),
    }
}

fn parse_frames(path: &Path) -> Result<(u32, u32), CliError> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let parsed = stem
        .split_once('_')
        .and_then(|(a, b)| Some((a.parse::<u32>().ok()?, b.parse::<u32>().ok()?)));
    parsed.ok_or_else(|| io_err(path, "match file name must be <frame>_<frame>"))
}

fn load_pairs(dir: &Path) -> Result<Vec<PairMatches>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "jsonl" || e == "xmf"))
        .collect();
    files.sort();
    files
        .par_iter()
        .map(|f| {
            let frames = parse_frames(f)?;
            Ok(PairMatches { frames, matches: read_matches(f)?.1 })
        })
        .collect()
}

#[derive(Serialize)]
struct AnchorRecord {
    frame: u32,
    index: usize,
    x: f64,
    y: f64,
    conf: f64,
    support: usize,
}

fn build(ctx: &RunContext, a: &BuildArgs) -> Result<(), CliError> {
    let p: BuildParams = ctx.resolve(
        "tracks_build",
        BuildParams { window: 7, refiner: "identity".into(), refiner_cmd: Vec::new() },
        &a.params,
    )?;
    if p.window == 0 || p.window.is_multiple_of(2) {
        return Err(CliError::Usage(format!("window must be a positive odd number, got {}", p.window)));
    }
    let refiner = match p.refiner.as_str() {
        "identity" => Refiner::Identity,
        "centroid" => Refiner::LocalCentroid { window: p.window },
        "external" if !p.refiner_cmd.is_empty() => Refiner::External { command: p.refiner_cmd.clone(), work_dir: None },
        "external" => return Err(CliError::Usage("external refiner needs --refiner-cmd".into())),
        other => return Err(CliError::Usage(format!("unknown refiner {other:?}"))),
    };
    require_dir(&a.matches)?;
    let pairs = load_pairs(&a.matches)?;
    let set = aggregate(&pairs, p.window).map_err(|e| CliError::Usage(e.to_string()))?;
    let tracks = refine_tracks(&set.tracks, &set.anchors, &set.observations, &refiner)
        .map_err(|e| CliError::NoResult(e.to_string()))?;
    let prov = ctx.provenance(&p);
    write_tracks(&a.out, &tracks, Some(&prov))?;
    let anchor_count: usize = set.anchors.values().map(Vec::len).sum();
    if let Some(path) = &a.anchors_out {
        let records: Vec<AnchorRecord> = set
            .anchors
            .iter()
            .flat_map(|(&frame, list)| {
                list.iter().enumerate().map(move |(index, an)| AnchorRecord {
                    frame,
                    index,
                    x: an.point.x,
                    y: an.point.y,
                    conf: an.confidence,
                    support: an.claimed.len(),
                })
            })
            .collect();
        write_jsonl(path, Some(&json!({"type": "anchor_header", "provenance": prov})), &records)?;
    }
    println!(
        "tracks build: {} pair files, {} observations, {} anchors, {} tracks",
        pairs.len(),
        set.observations.len(),
        anchor_count,
        tracks.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct PairRecord<'a> {
    #[serde(flatten)]
    record: &'a TrainingPairRecord,
    matches_path: String,
    match_count: usize,
}

fn select(ctx: &RunContext, a: &SelectArgs) -> Result<(), CliError> {
    let p: SelectParams = ctx.resolve(
        "tracks_select_pairs",
        SelectParams {
            preset: "far".into(),
            min_gap: None,
            min_covisible: None,
            min_motion: None,
            sample: 0,
            cell: 16.0,
            verify_threshold: 0.0,
        },
        &a.params,
    )?;
    let base = match p.preset.as_str() {
        "far" => SelectionConfig::far(),
        "near" => SelectionConfig::near(),
        other => return Err(CliError::Usage(format!("unknown preset {other:?}"))),
    };
    let cfg = SelectionConfig {
        min_gap: p.min_gap.unwrap_or(base.min_gap),
        min_covisible: p.min_covisible.unwrap_or(base.min_covisible),
        min_motion: p.min_motion.unwrap_or(base.min_motion),
    };
    if cfg.min_gap == 0 || !(cfg.min_motion >= 0.0) || !(p.cell > 0.0) || !(p.verify_threshold >= 0.0) {
        return Err(CliError::Usage("selection thresholds out of range".into()));
    }
    require_file(&a.tracks)?;
    let tracks = read_tracks(&a.tracks)?;
    let selected = select_training_pairs(&tracks, &cfg);
    let prov = ctx.provenance(&p);
    let out_dir = a.out.parent().unwrap_or(Path::new("."));
    let outcomes: Vec<Result<(TrainingPairRecord, String), String>> = selected
        .into_par_iter()
        .enumerate()
        .map(|(i, mut rec)| {
            let (fa, fb) = rec.frames;
            if p.sample > 0 {
                rec.matches = sample_matches(&rec.matches, p.sample, p.cell).map_err(|e| format!("{fa}_{fb}: {e}"))?;
            }
            if p.verify_threshold > 0.0 {
                rec.matches = geometric_verify(&rec.matches, p.verify_threshold, derive_seed(ctx.seed, i as u64))
                    .map_err(|e| format!("{fa}_{fb}: {e}"))?;
            }
            let rel = format!("pairs/{fa:06}_{fb:06}.jsonl");
            let mut header = MatchHeader::new(format!("{fa:06}"), format!("{fb:06}"), (0, 0), (0, 0));
            header.provenance = Some(prov.clone());
            write_matches_jsonl(&out_dir.join(&rel), &header, &rec.matches).map_err(|e| e.to_string())?;
            Ok((rec, rel))
        })
        .collect();
    let mut kept = Vec::new();
    let mut failed = 0;
    for o in outcomes {
        match o {
            Ok(v) => kept.push(v),
            Err(e) => {
                log::warn!("{e}");
                failed += 1;
            }
        }
    }
    let records: Vec<PairRecord> = kept
        .iter()
        .map(|(rec, rel)| PairRecord { record: rec, matches_path: rel.clone(), match_count: rec.matches.len() })
        .collect();
    write_jsonl(&a.out, Some(&json!({"type": "pair_list_header", "provenance": prov})), &records)?;
    println!(
        "tracks select-pairs: {} tracks, {} pairs selected (gap >= {}, covisible >= {}, motion >= {}), {} failed",
        tracks.len(),
        records.len(),
        cfg.min_gap,
        cfg.min_covisible,
        cfg.min_motion,
        failed
    );
    Ok(())
}

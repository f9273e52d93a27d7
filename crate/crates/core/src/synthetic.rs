//! Procedural fixtures: a posed plane+box scene, random two-view scenes,
//! a planar-motion video with fragmented matches and planar warp pairs.
//!
//! Everything is a pure function of its seed.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::geometry::{
    CameraIntrinsics, Correspondence, DepthMap, PixelPoint, PlanarTransform, PosedView, RelativePoseEstimate, RigidPose,
};
use crate::io::{write_jsonl, write_matches_jsonl, EvalManifestRecord, IoError, MatchHeader, PoseGt};
use crate::seed::derive_seed;
use crate::tracks::{plan_pair_schedule, PairMatches};
use crate::Image;

/// A fronto-parallel textured wall with a shallow box in front of it, seen
/// by parallel cameras translated along x.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneBoxScene {
    pub size: u32,
    pub focal: f64,
    pub wall_depth: f64,
    pub box_min: Vector3<f64>,
    pub box_max: Vector3<f64>,
}

impl Default for PlaneBoxScene {
    fn default() -> Self {
        Self {
            size: 256,
            focal: 220.0,
            wall_depth: 10.0,
            box_min: Vector3::new(-0.2, -1.0, 9.0),
            box_max: Vector3::new(2.2, 1.2, 9.6),
        }
    }
}

impl PlaneBoxScene {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        let c = (self.size as f64 - 1.0) / 2.0;
        CameraIntrinsics::new(self.focal, self.focal, c, c, self.size, self.size).expect("valid intrinsics")
    }

    /// Nearest surface hit along `origin + s * dir` as `(s, point, on_box)`.
    fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, Vector3<f64>, bool)> {
        let mut best = None;
        if dir.z > 0.0 {
            let s = (self.wall_depth - origin.z) / dir.z;
            if s > 0.0 {
                best = Some((s, false));
            }
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for a in 0..3 {
            if dir[a].abs() < 1e-15 {
                if origin[a] < self.box_min[a] || origin[a] > self.box_max[a] {
                    lo = f64::INFINITY;
                }
                continue;
            }
            let t0 = (self.box_min[a] - origin[a]) / dir[a];
            let t1 = (self.box_max[a] - origin[a]) / dir[a];
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
        if lo <= hi && lo > 0.0 && best.is_none_or(|(s, _)| lo < s) {
            best = Some((lo, true));
        }
        best.map(|(s, on_box)| (s, origin + dir * s, on_box))
    }

    fn texture(p: &Vector3<f64>, on_box: bool) -> f32 {
        let v = if on_box {
            let cell = ((p.x * 4.0).floor() + (p.y * 4.0).floor() + (p.z * 4.0).floor()) as i64;
            if cell.rem_euclid(2) == 0 { 200.0 } else { 70.0 }
        } else {
            128.0 + 60.0 * (2.3 * p.x).sin() * (1.9 * p.y).cos() + 40.0 * (0.7 * p.x + 3.1 * p.y).sin()
        };
        v.clamp(0.0, 255.0) as f32
    }

    /// Renders depth and image for a camera centred at `(x, 0, 0)`.
    pub fn render(&self, id: &str, x: f64) -> PosedView {
        let k = self.intrinsics();
        let center = Vector3::new(x, 0.0, 0.0);
        let pose = RigidPose::new(Matrix3::identity(), -center).expect("identity rotation");
        let n = self.size;
        let hits: Vec<Option<(f64, Vector3<f64>, bool)>> = (0..n * n)
            .into_par_iter()
            .map(|i| {
                let (u, v) = ((i % n) as f64, (i / n) as f64);
                let dir = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
                self.cast(&center, &dir)
            })
            .collect();
        let depth = DepthMap::new(n, n, hits.iter().map(|h| h.map_or(f64::NAN, |h| h.0)).collect()).expect("sized");
        let image = Image::new(
            n,
            n,
            1,
            hits.iter().map(|h| h.map_or(0.0, |(_, p, b)| Self::texture(&p, b))).collect(),
        )
        .expect("sized");
        PosedView::new(id, k, pose, depth).with_image(image)
    }

    /// `count` views spaced `baseline` apart along x, ids `view_000`, ...
    pub fn views(&self, count: usize, baseline: f64) -> Vec<PosedView> {
        (0..count).map(|i| self.render(&format!("view_{i:03}"), i as f64 * baseline)).collect()
    }
}

/// Two pinhole views of a random nonplanar point cloud.
#[derive(Debug, Clone)]
pub struct TwoViewScene {
    pub k0: CameraIntrinsics,
    pub k1: CameraIntrinsics,
    /// Right-from-left rotation.
    pub rotation: Matrix3<f64>,
    /// Right-from-left translation, unit length.
    pub translation: Vector3<f64>,
    pub points: Vec<Vector3<f64>>,
    pub matches: Vec<Correspondence>,
}

impl TwoViewScene {
    pub fn relative_pose(&self) -> RelativePoseEstimate {
        RelativePoseEstimate::new(self.rotation, self.translation).expect("unit translation")
    }

    pub fn pose_gt(&self) -> PoseGt {
        let row = |m: &Matrix3<f64>| {
            let mut a = [0.0; 9];
            for r in 0..3 {
                for c in 0..3 {
                    a[3 * r + c] = m[(r, c)];
                }
            }
            a
        };
        PoseGt {
            r: row(&self.rotation),
            t: [self.translation.x, self.translation.y, self.translation.z],
            k0: row(&self.k0.matrix()),
            k1: row(&self.k1.matrix()),
        }
    }
}

/// Random relative pose (rotation up to ~10 degrees per axis, unit
/// translation) and `n` points visible in both 640x480 views. Matches get
/// isotropic Gaussian pixel noise of standard deviation `noise_px`.
pub fn two_view_scene(seed: u64, n: usize, noise_px: f64) -> TwoViewScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k0 = CameraIntrinsics::new(500.0, 500.0, 319.5, 239.5, 640, 480).expect("valid");
    let k1 = CameraIntrinsics::new(520.0, 520.0, 319.5, 239.5, 640, 480).expect("valid");
    let a = 10f64.to_radians();
    let rotation = Rotation3::from_euler_angles(rng.gen_range(-a..a), rng.gen_range(-a..a), rng.gen_range(-a..a)).into_inner();
    let translation = loop {
        let t = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        if t.norm() > 0.3 {
            break t.normalize();
        }
    };
    let noise = Normal::new(0.0, noise_px.max(0.0)).expect("finite std");
    let mut points = Vec::with_capacity(n);
    let mut matches = Vec::with_capacity(n);
    while points.len() < n {
        let z = rng.gen_range(4.0..12.0);
        let x = k0.unproject(PixelPoint::new(rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)), z);
        let xr = rotation * x + translation;
        if xr.z <= 0.5 {
            continue;
        }
        let (pl, pr) = (k0.project(&x), k1.project(&xr));
        if !k1.contains(pr) {
            continue;
        }
        let mut jitter = |p: PixelPoint| PixelPoint::new(p.x + noise.sample(&mut rng), p.y + noise.sample(&mut rng));
        let (l, r) = (jitter(pl), jitter(pr));
        points.push(x);
        matches.push(Correspondence::exact(l, r));
    }
    TwoViewScene { k0, k1, rotation, translation, points, matches }
}

/// Writes `count` two-view scenes as a pose evaluation set: `manifest.jsonl`
/// plus one prediction file per pair in `preds/`. Returns the manifest path.
pub fn write_pose_fixture(dir: &Path, count: usize, seed: u64, noise_px: f64) -> Result<PathBuf, IoError> {
    let scenes: Vec<TwoViewScene> = (0..count)
        .into_par_iter()
        .map(|i| two_view_scene(derive_seed(seed, i as u64), 100, noise_px))
        .collect();
    let mut records = Vec::with_capacity(count);
    for (i, s) in scenes.iter().enumerate() {
        let id = format!("scene_{i:03}");
        let size = (s.k0.width, s.k0.height);
        write_matches_jsonl(
            &dir.join("preds").join(format!("{id}.jsonl")),
            &MatchHeader::new(format!("{id}_0.png"), format!("{id}_1.png"), size, (s.k1.width, s.k1.height)),
            &s.matches,
        )?;
        records.push(EvalManifestRecord {
            pair_id: id.clone(),
            left: format!("{id}_0.png"),
            right: format!("{id}_1.png"),
            gt_kind: "pose".into(),
            gt: serde_json::to_value(s.pose_gt()).expect("serializable"),
            left_size: Some([s.k0.width, s.k0.height]),
            right_size: Some([s.k1.width, s.k1.height]),
            native_size: None,
        });
    }
    let manifest = dir.join("manifest.jsonl");
    write_jsonl(&manifest, None, &records)?;
    Ok(manifest)
}

/// Writes `count` planar pairs whose predicted matches are exactly
/// consistent with a random similarity warp. Pairs listed in `empty` get an
/// empty prediction file. Returns the manifest path.
pub fn write_warp_fixture(dir: &Path, count: usize, seed: u64, empty: &[usize]) -> Result<PathBuf, IoError> {
    let (w, h) = (640u32, 480u32);
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let center = PixelPoint::new(w as f64 / 2.0, h as f64 / 2.0);
        let t = PlanarTransform::translation(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0))
            .compose(&PlanarTransform::rotation_about(rng.gen_range(-30.0..30.0), center));
        let matches: Vec<Correspondence> = if empty.contains(&i) {
            Vec::new()
        } else {
            (0..150)
                .map(|_| {
                    let p = PixelPoint::new(rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64));
                    Correspondence::exact(p, t.apply(p))
                })
                .collect()
        };
        let id = format!("pair_{i:03}");
        write_matches_jsonl(
            &dir.join("preds").join(format!("{id}.jsonl")),
            &MatchHeader::new(format!("{id}_0.png"), format!("{id}_1.png"), (w, h), (w, h)),
            &matches,
        )?;
        records.push(EvalManifestRecord {
            pair_id: id.clone(),
            left: format!("{id}_0.png"),
            right: format!("{id}_1.png"),
            gt_kind: "planar".into(),
            gt: serde_json::to_value(t.to_row_major()).expect("serializable"),
            left_size: Some([w, h]),
            right_size: Some([w, h]),
            native_size: None,
        });
    }
    let manifest = dir.join("manifest.jsonl");
    write_jsonl(&manifest, None, &records)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarVideoConfig {
    pub frames: usize,
    pub width: u32,
    pub height: u32,
    /// Spacing of the tracked scene points.
    pub grid: f64,
    /// Translation per frame in pixels.
    pub velocity: (f64, f64),
    pub rotation_deg_per_frame: f64,
    pub lookahead: usize,
    /// Maximum endpoint jitter radius.
    pub jitter: f64,
    pub duplicate_fraction: f64,
    /// Maximum offset of a duplicate from its original endpoint.
    pub duplicate_offset: f64,
}

impl Default for PlanarVideoConfig {
    fn default() -> Self {
        Self {
            frames: 50,
            width: 640,
            height: 480,
            grid: 24.0,
            velocity: (2.8, 1.0),
            rotation_deg_per_frame: 0.05,
            lookahead: 10,
            jitter: 1.0,
            duplicate_fraction: 0.2,
            duplicate_offset: 2.0,
        }
    }
}

/// A video of a textured plane under known rigid image motion, with the
/// fragmented pairwise matches a dense matcher would produce.
#[derive(Debug, Clone)]
pub struct PlanarVideo {
    pub config: PlanarVideoConfig,
    pub pairs: Vec<PairMatches>,
}

impl PlanarVideo {
    /// Map from frame-0 coordinates to frame `f`.
    pub fn motion(&self, f: u32) -> PlanarTransform {
        motion(&self.config, f)
    }

    /// True position in frame `b` of the scene point seen at `p` in frame `a`.
    pub fn flow(&self, a: u32, b: u32, p: PixelPoint) -> PixelPoint {
        self.motion(b).apply(self.motion(a).inverse().apply(p))
    }
}

fn motion(cfg: &PlanarVideoConfig, f: u32) -> PlanarTransform {
    let f = f as f64;
    let center = PixelPoint::new(cfg.width as f64 / 2.0, cfg.height as f64 / 2.0);
    PlanarTransform::translation(cfg.velocity.0 * f, cfg.velocity.1 * f)
        .compose(&PlanarTransform::rotation_about(cfg.rotation_deg_per_frame * f, center))
}

fn in_disk(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
    loop {
        let (x, y) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        if x * x + y * y <= 1.0 {
            return (x * radius, y * radius);
        }
    }
}

/// Generates the video's pair matches over the lookahead schedule. Every
/// scene point visible in both frames yields one match with independently
/// jittered endpoints and confidence in `[0.5, 1)`; a fraction of matches
/// gain a displaced, lower-confidence duplicate.
pub fn planar_video(cfg: &PlanarVideoConfig, seed: u64) -> PlanarVideo {
    let schedule = plan_pair_schedule(cfg.frames, 1, cfg.lookahead).unwrap_or_default();
    let margin = cfg.jitter + cfg.duplicate_offset + 1.0;
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let inside = |p: PixelPoint| p.x >= margin && p.y >= margin && p.x <= w - 1.0 - margin && p.y <= h - 1.0 - margin;
    let reach = (cfg.velocity.0.abs() + cfg.velocity.1.abs()) * cfg.frames as f64 + w.max(h);
    let steps = (reach / cfg.grid).ceil() as i64;
    let scene: Vec<PixelPoint> = (-steps..=steps)
        .flat_map(|i| (-steps..=steps).map(move |j| (i, j)))
        .map(|(i, j)| PixelPoint::new(w / 2.0 + (i as f64 + 0.5) * cfg.grid, h / 2.0 + (j as f64 + 0.5) * cfg.grid))
        .collect();
    let pairs = schedule
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64));
            let (ta, tb) = (motion(cfg, a as u32), motion(cfg, b as u32));
            let mut matches = Vec::new();
            for s in &scene {
                let (pa, pb) = (ta.apply(*s), tb.apply(*s));
                if !inside(pa) || !inside(pb) {
                    continue;
                }
                let (ja, jb) = (in_disk(&mut rng, cfg.jitter), in_disk(&mut rng, cfg.jitter));
                let l = PixelPoint::new(pa.x + ja.0, pa.y + ja.1);
                let r = PixelPoint::new(pb.x + jb.0, pb.y + jb.1);
                let conf = rng.gen_range(0.5..1.0);
                matches.push(Correspondence { left: l, right: r, confidence: conf });
                if rng.gen_bool(cfg.duplicate_fraction) {
                    let (da, db) = (in_disk(&mut rng, cfg.duplicate_offset), in_disk(&mut rng, cfg.duplicate_offset));
                    matches.push(Correspondence {
                        left: PixelPoint::new(l.x + da.0, l.y + da.1),
                        right: PixelPoint::new(r.x + db.0, r.y + db.1),
                        confidence: conf * rng.gen_range(0.5..0.95),
                    });
                }
            }
            PairMatches { frames: (a as u32, b as u32), matches }
        })
        .collect();
    PlanarVideo { config: cfg.clone(), pairs }
}

/// Writes one match file per pair, named `<a>_<b>.jsonl` with zero-padded
/// frame indices.
pub fn write_video_matches(dir: &Path, video: &PlanarVideo) -> Result<(), IoError> {
    let size = (video.config.width, video.config.height);
    for p in &video.pairs {
        let (a, b) = p.frames;
        let header = MatchHeader::new(format!("{a:06}"), format!("{b:06}"), size, size);
        write_matches_jsonl(&dir.join(format!("{a:06}_{b:06}.jsonl")), &header, &p.matches)?;
    }
    Ok(())
}

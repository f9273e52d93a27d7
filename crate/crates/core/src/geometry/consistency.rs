use rayon::prelude::*;

use super::types::{CameraIntrinsics, Correspondence, DepthMap, PixelPoint, PosedView, RigidPose};
use super::GeometryError;

/// Default lattice spacing for ground-truth sampling.
pub const DEFAULT_GRID_STEP: u32 = 8;

/// Outcome of transporting a pixel into another camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Visible { point: PixelPoint, depth: f64 },
    /// The transported point has `z <= 0` in the target camera.
    BehindCamera { depth: f64 },
}

/// Lifts `x_l` with `depth_l`, moves it by `xi_lr` and projects it with
/// `k_r`. The returned depth is the z-coordinate in the target camera.
pub fn lift_and_project(
    x_l: PixelPoint,
    depth_l: f64,
    k_l: &CameraIntrinsics,
    k_r: &CameraIntrinsics,
    xi_lr: &RigidPose,
) -> Result<Projection, GeometryError> {
    if !(depth_l > 0.0) {
        return Err(GeometryError::NonPositiveDepth(depth_l));
    }
    let cam_r = xi_lr.transform(&k_l.unproject(x_l, depth_l));
    if cam_r.z <= 0.0 {
        return Ok(Projection::BehindCamera { depth: cam_r.z });
    }
    Ok(Projection::Visible {
        point: k_r.project(&cam_r),
        depth: cam_r.z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyErrors {
    /// Relative depth disagreement at the projected location.
    pub depth_error: f64,
    /// Pixel distance after warping there and back.
    pub cycle_error: f64,
    pub projected: PixelPoint,
}

/// Acceptance gates for depth-warped matches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtThresholds {
    pub max_depth_error: f64,
    pub max_cycle_error: f64,
}

impl Default for GtThresholds {
    fn default() -> Self {
        Self {
            max_depth_error: 0.05,
            max_cycle_error: 3.0,
        }
    }
}

impl GtThresholds {
    pub fn accepts(&self, e: &ConsistencyErrors) -> bool {
        e.depth_error < self.max_depth_error && e.cycle_error < self.max_cycle_error
    }
}

/// Depth and cycle errors of the depth-warped match of `x_l`.
///
/// The backward warp lifts `x_proj` with the bilinear right depth and
/// returns through the inverse relative pose. A round trip that ends behind
/// the left camera yields an infinite cycle error.
pub fn correspondence_errors(
    x_l: PixelPoint,
    depth_l: &DepthMap,
    depth_r: &DepthMap,
    cams: (&CameraIntrinsics, &CameraIntrinsics),
    xi_lr: &RigidPose,
) -> Result<ConsistencyErrors, GeometryError> {
    let (k_l, k_r) = cams;
    let d_l = depth_l.sample_bilinear(x_l).ok_or(GeometryError::InvalidDepth)?;
    let (x_proj, d_proj) = match lift_and_project(x_l, d_l, k_l, k_r, xi_lr)? {
        Projection::Visible { point, depth } => (point, depth),
        Projection::BehindCamera { depth } => return Err(GeometryError::BehindCamera(depth)),
    };
    if !in_depth_bounds(depth_r, x_proj) {
        return Err(GeometryError::OutOfBounds {
            x: x_proj.x,
            y: x_proj.y,
        });
    }
    let d_r = depth_r
        .sample_bilinear(x_proj)
        .ok_or(GeometryError::InvalidDepth)?;
    let depth_error = (d_r - d_proj).abs() / d_r;
    let cycle_error = match lift_and_project(x_proj, d_r, k_r, k_l, &xi_lr.inverse())? {
        Projection::Visible { point, .. } => point.distance(&x_l),
        Projection::BehindCamera { .. } => f64::INFINITY,
    };
    Ok(ConsistencyErrors {
        depth_error,
        cycle_error,
        projected: x_proj,
    })
}

fn in_depth_bounds(d: &DepthMap, p: PixelPoint) -> bool {
    p.x >= 0.0 && p.y >= 0.0 && p.x <= (d.width() - 1) as f64 && p.y <= (d.height() - 1) as f64
}

/// Samples the left view on a `grid_step` lattice and keeps every point
/// whose depth-warped match passes both consistency gates.
///
/// Output is in row-major lattice order with confidence 1.
pub fn filter_grid_correspondences(
    left: &PosedView,
    right: &PosedView,
    grid_step: u32,
    thresholds: &GtThresholds,
) -> Result<Vec<Correspondence>, GeometryError> {
    if grid_step == 0 {
        return Err(GeometryError::InvalidGridStep);
    }
    let (d_l, pose_l) = left.geometry()?;
    let (d_r, pose_r) = right.geometry()?;
    let xi_lr = RigidPose::relative(pose_l, pose_r);
    let cams = (&left.intrinsics, &right.intrinsics);
    let rows: Vec<u32> = (0..d_l.height()).step_by(grid_step as usize).collect();
    let matches = rows
        .par_iter()
        .flat_map_iter(|&y| {
            (0..d_l.width())
                .step_by(grid_step as usize)
                .filter_map(move |x| {
                    let x_l = PixelPoint::new(x as f64, y as f64);
                    let e = correspondence_errors(x_l, d_l, d_r, cams, &xi_lr).ok()?;
                    thresholds
                        .accepts(&e)
                        .then(|| Correspondence::exact(x_l, e.projected))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(matches)
}

/// Fraction of valid-depth left pixels whose warp lands inside the right
/// view with a relative depth error below the gate. Not symmetric.
pub fn overlap_ratio(
    left: &PosedView,
    right: &PosedView,
    thresholds: &GtThresholds,
) -> Result<f64, GeometryError> {
    let (d_l, pose_l) = left.geometry()?;
    let (d_r, pose_r) = right.geometry()?;
    let xi_lr = RigidPose::relative(pose_l, pose_r);
    let (k_l, k_r) = (&left.intrinsics, &right.intrinsics);
    let (valid, consistent) = (0..d_l.height())
        .into_par_iter()
        .map(|y| {
            let mut valid = 0u64;
            let mut consistent = 0u64;
            for x in 0..d_l.width() {
                let depth = d_l.get(x, y);
                if depth <= 0.0 {
                    continue;
                }
                valid += 1;
                let p = PixelPoint::new(x as f64, y as f64);
                let Ok(Projection::Visible { point, depth: d_proj }) =
                    lift_and_project(p, depth, k_l, k_r, &xi_lr)
                else {
                    continue;
                };
                if let Some(d) = d_r.sample_bilinear(point) {
                    if (d - d_proj).abs() / d < thresholds.max_depth_error {
                        consistent += 1;
                    }
                }
            }
            (valid, consistent)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if valid == 0 {
        return Err(GeometryError::NoValidDepth);
    }
    Ok(consistent as f64 / valid as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(200.0, 180.0, 63.5, 47.5, 128, 96).unwrap()
    }

    #[test]
    fn identity_pose_is_identity() {
        let out = lift_and_project(PixelPoint::new(63.5, 47.5), 1.0, &k(), &k(), &RigidPose::identity())
            .unwrap();
        assert_eq!(
            out,
            Projection::Visible {
                point: PixelPoint::new(63.5, 47.5),
                depth: 1.0
            }
        );
    }

    #[test]
    fn forward_translation_on_principal_ray() {
        let pose = RigidPose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, -1.0)).unwrap();
        let Projection::Visible { point, depth } =
            lift_and_project(PixelPoint::new(63.5, 47.5), 2.0, &k(), &k(), &pose).unwrap()
        else {
            panic!("expected visible");
        };
        assert_eq!(depth, 1.0);
        assert!(point.distance(&PixelPoint::new(63.5, 47.5)) < 1e-12);
    }

    #[test]
    fn doubled_focal_length_doubles_offset() {
        let k_l = k();
        let k_r = CameraIntrinsics::new(400.0, 180.0, 63.5, 47.5, 128, 96).unwrap();
        let Projection::Visible { point, .. } = lift_and_project(
            PixelPoint::new(63.5 + 200.0, 47.5),
            1.0,
            &k_l,
            &k_r,
            &RigidPose::identity(),
        )
        .unwrap() else {
            panic!()
        };
        assert!(point.distance(&PixelPoint::new(63.5 + 400.0, 47.5)) < 1e-9);
    }

    #[test]
    fn non_positive_depth_and_behind_camera() {
        let err = lift_and_project(PixelPoint::new(1.0, 1.0), 0.0, &k(), &k(), &RigidPose::identity());
        assert_eq!(err, Err(GeometryError::NonPositiveDepth(0.0)));
        let pose = RigidPose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, -5.0)).unwrap();
        let out = lift_and_project(PixelPoint::new(63.5, 47.5), 2.0, &k(), &k(), &pose).unwrap();
        assert_eq!(out, Projection::BehindCamera { depth: -3.0 });
    }

    #[test]
    fn thresholds_are_strict() {
        let t = GtThresholds::default();
        let at = |d, c| ConsistencyErrors {
            depth_error: d,
            cycle_error: c,
            projected: PixelPoint::new(0.0, 0.0),
        };
        assert!(t.accepts(&at(0.0499, 2.99)));
        assert!(!t.accepts(&at(0.05, 0.0)));
        assert!(!t.accepts(&at(0.0, 3.0)));
    }

    #[test]
    fn constant_depth_scaled_right_view() {
        let d_l = DepthMap::from_fn(128, 96, |_, _| 2.0).unwrap();
        let d_r = d_l.map_values(|v| v * 1.1).unwrap();
        let e = correspondence_errors(
            PixelPoint::new(40.0, 30.0),
            &d_l,
            &d_r,
            (&k(), &k()),
            &RigidPose::identity(),
        )
        .unwrap();
        assert!((e.depth_error - 0.1 / 1.1).abs() < 1e-12);
    }

    #[test]
    fn out_of_bounds_and_invalid() {
        let d = DepthMap::from_fn(128, 96, |x, _| if x < 10 { 0.0 } else { 2.0 }).unwrap();
        let pose = RigidPose::new(Matrix3::identity(), Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let e = correspondence_errors(PixelPoint::new(100.0, 10.0), &d, &d, (&k(), &k()), &pose);
        assert!(matches!(e, Err(GeometryError::OutOfBounds { .. })));
        let e = correspondence_errors(PixelPoint::new(5.0, 10.0), &d, &d, (&k(), &k()), &pose);
        assert_eq!(e, Err(GeometryError::InvalidDepth));
    }

    #[test]
    fn missing_geometry() {
        let mut v = PosedView::new("a", k(), RigidPose::identity(), DepthMap::from_fn(128, 96, |_, _| 1.0).unwrap());
        v.pose = None;
        let e = filter_grid_correspondences(&v, &v, 8, &GtThresholds::default());
        assert_eq!(e, Err(GeometryError::GeometryMissing("a".into())));
        assert!(matches!(overlap_ratio(&v, &v, &GtThresholds::default()), Err(GeometryError::GeometryMissing(_))));
    }

    #[test]
    fn no_valid_depth() {
        let v = PosedView::new("a", k(), RigidPose::identity(), DepthMap::from_fn(128, 96, |_, _| 0.0).unwrap());
        assert_eq!(overlap_ratio(&v, &v, &GtThresholds::default()), Err(GeometryError::NoValidDepth));
    }
}

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::raster::Image;

const ORTHONORMAL_TOL: f64 = 1e-9;

/// A continuous pixel location. May lie outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn chebyshev(&self, other: &PixelPoint) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn homogeneous(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, 1.0)
    }
}

impl From<Vector2<f64>> for PixelPoint {
    fn from(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }
}

/// Pinhole intrinsics with the image size they belong to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidIntrinsics(msg));
        if self.width == 0 || self.height == 0 {
            return bad(format!("size {}x{}", self.width, self.height));
        }
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return bad(format!("focal lengths ({}, {})", self.fx, self.fy));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64) {
            return bad(format!("cx = {} outside (0, {})", self.cx, self.width));
        }
        if !(self.cy > 0.0 && self.cy < self.height as f64) {
            return bad(format!("cy = {} outside (0, {})", self.cy, self.height));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Back-projects a pixel at the given z-depth into camera coordinates.
    pub fn unproject(&self, p: PixelPoint, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (p.x - self.cx) / self.fx * depth,
            (p.y - self.cy) / self.fy * depth,
            depth,
        )
    }

    /// Normalized image-plane coordinates `K^-1 [x, y, 1]`.
    pub fn normalize(&self, p: PixelPoint) -> PixelPoint {
        PixelPoint::new((p.x - self.cx) / self.fx, (p.y - self.cy) / self.fy)
    }

    /// Projects a camera-frame point. The caller is responsible for `z > 0`.
    pub fn project(&self, point: &Vector3<f64>) -> PixelPoint {
        PixelPoint::new(
            self.fx * point.x / point.z + self.cx,
            self.fy * point.y / point.z + self.cy,
        )
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        p.x >= 0.0
            && p.y >= 0.0
            && p.x <= (self.width - 1) as f64
            && p.y <= (self.height - 1) as f64
    }
}

/// World-to-camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        check_rotation(&rotation, ORTHONORMAL_TOL).map_err(GeometryError::InvalidPose)?;
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidPose("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Like [`RigidPose::new`] but snaps a nearly orthonormal rotation (as
    /// stored in text files with limited precision) onto SO(3) first.
    pub fn nearest(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        check_rotation(&rotation, 1e-3).map_err(GeometryError::InvalidPose)?;
        let svd = rotation.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            r = -r;
        }
        Self::new(r, translation)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Relative pose taking left-camera coordinates to right-camera
    /// coordinates: `right * left^-1`.
    pub fn relative(left: &RigidPose, right: &RigidPose) -> Self {
        right.compose(&left.inverse())
    }

    /// Row-major 4x4 homogeneous matrix.
    pub fn to_row_major(&self) -> [f64; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
            0.0, 0.0, 0.0, 1.0,
        ]
    }
}

pub(crate) fn check_rotation(r: &Matrix3<f64>, tol: f64) -> Result<(), String> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err("non-finite rotation".into());
    }
    let dev = (r.transpose() * r - Matrix3::identity()).abs().max();
    if dev > tol {
        return Err(format!("rotation not orthonormal (deviation {dev:e})"));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > tol {
        return Err(format!("rotation determinant {det} != 1"));
    }
    Ok(())
}

/// Dense per-pixel depth. Values `<= 0` are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidDepthMap("empty".into()));
        }
        if values.len() != width as usize * height as usize {
            return Err(GeometryError::InvalidDepthMap(format!(
                "{} values for {width}x{height}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidDepthMap("non-finite value".into()));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f64) -> Result<Self, GeometryError> {
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn is_valid_at(&self, x: u32, y: u32) -> bool {
        self.get(x, y) > 0.0
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self, GeometryError> {
        Self::new(self.width, self.height, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Bilinear depth at a continuous location.
    ///
    /// `None` outside `[0, W-1] x [0, H-1]`, or when any neighbor with a
    /// nonzero interpolation weight holds an invalid depth.
    pub fn sample_bilinear(&self, p: PixelPoint) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1.0 && p.y <= h - 1.0) {
            return None;
        }
        let x0 = (p.x.floor() as u32).min(self.width.saturating_sub(2));
        let y0 = (p.y.floor() as u32).min(self.height.saturating_sub(2));
        let ax = p.x - x0 as f64;
        let ay = p.y - y0 as f64;
        let mut acc = 0.0;
        for (dx, wx) in [(0u32, 1.0 - ax), (1, ax)] {
            for (dy, wy) in [(0u32, 1.0 - ay), (1, ay)] {
                let weight = wx * wy;
                if weight == 0.0 {
                    continue;
                }
                let v = self.get(x0 + dx, y0 + dy);
                if v <= 0.0 {
                    return None;
                }
                acc += weight * v;
            }
        }
        Some(acc)
    }
}

/// A pixel-to-pixel match with matcher confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub left: PixelPoint,
    pub right: PixelPoint,
    pub confidence: f64,
}

impl Correspondence {
    pub fn new(left: PixelPoint, right: PixelPoint, confidence: f64) -> Result<Self, GeometryError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(GeometryError::InvalidConfidence(confidence));
        }
        Ok(Self {
            left,
            right,
            confidence,
        })
    }

    /// Full-confidence match, used for geometric ground truth.
    pub fn exact(left: PixelPoint, right: PixelPoint) -> Self {
        Self {
            left,
            right,
            confidence: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Affine,
    Similarity,
    Homography,
}

/// A 3x3 transform acting on homogeneous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarTransform {
    kind: TransformKind,
    matrix: Matrix3<f64>,
}

impl PlanarTransform {
    pub fn new(kind: TransformKind, matrix: Matrix3<f64>) -> Result<Self, GeometryError> {
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidTransform("non-finite entry".into()));
        }
        if matrix.determinant().abs() <= 1e-12 {
            return Err(GeometryError::InvalidTransform("singular matrix".into()));
        }
        if kind != TransformKind::Homography
            && (matrix[(2, 0)] != 0.0 || matrix[(2, 1)] != 0.0 || matrix[(2, 2)] != 1.0)
        {
            return Err(GeometryError::InvalidTransform(
                "affine transforms need a [0, 0, 1] last row".into(),
            ));
        }
        Ok(Self { kind, matrix })
    }

    pub fn identity(kind: TransformKind) -> Self {
        Self {
            kind,
            matrix: Matrix3::identity(),
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            kind: TransformKind::Similarity,
            matrix: Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0),
        }
    }

    /// Rotation by `degrees` (counter-clockwise in a y-down frame appears
    /// clockwise on screen) about `center`.
    pub fn rotation_about(degrees: f64, center: PixelPoint) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        let m = Matrix3::new(
            c,
            -s,
            center.x - c * center.x + s * center.y,
            s,
            c,
            center.y - s * center.x - c * center.y,
            0.0,
            0.0,
            1.0,
        );
        Self {
            kind: TransformKind::Similarity,
            matrix: m,
        }
    }

    pub fn from_row_major(kind: TransformKind, m: &[f64; 9]) -> Result<Self, GeometryError> {
        Self::new(kind, Matrix3::from_row_slice(m))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.matrix;
        [
            m[(0, 0)], m[(0, 1)], m[(0, 2)],
            m[(1, 0)], m[(1, 1)], m[(1, 2)],
            m[(2, 0)], m[(2, 1)], m[(2, 2)],
        ]
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// Maps a point; returns `None` when it lands on or behind the line at
    /// infinity.
    pub fn try_apply(&self, p: PixelPoint) -> Option<PixelPoint> {
        let v = self.matrix * p.homogeneous();
        if v.z.abs() < 1e-15 {
            return None;
        }
        Some(PixelPoint::new(v.x / v.z, v.y / v.z))
    }

    /// Maps a point. Points sent to infinity come back non-finite.
    pub fn apply(&self, p: PixelPoint) -> PixelPoint {
        let v = self.matrix * p.homogeneous();
        PixelPoint::new(v.x / v.z, v.y / v.z)
    }

    /// Homogeneous `w` of the mapped point (positive for points in front of
    /// the line at infinity when `m[2][2] > 0`).
    pub fn homogeneous_w(&self, p: PixelPoint) -> f64 {
        (self.matrix * p.homogeneous()).z
    }

    pub fn inverse(&self) -> Self {
        let inv = self
            .matrix
            .try_inverse()
            .expect("PlanarTransform is invertible by construction");
        let mut matrix = inv;
        if self.kind != TransformKind::Homography {
            matrix[(2, 0)] = 0.0;
            matrix[(2, 1)] = 0.0;
            matrix[(2, 2)] = 1.0;
        }
        Self {
            kind: self.kind,
            matrix,
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &PlanarTransform) -> Self {
        use TransformKind::*;
        let kind = match (self.kind, other.kind) {
            (Similarity, Similarity) => Similarity,
            (Homography, _) | (_, Homography) => Homography,
            _ => Affine,
        };
        let mut matrix = self.matrix * other.matrix;
        if kind != Homography {
            matrix[(2, 0)] = 0.0;
            matrix[(2, 1)] = 0.0;
            matrix[(2, 2)] = 1.0;
        }
        Self { kind, matrix }
    }
}

/// Estimated or ground-truth relative pose with a unit translation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePoseEstimate {
    rotation: Matrix3<f64>,
    translation_direction: Vector3<f64>,
}

impl RelativePoseEstimate {
    /// Normalizes `translation` to unit length.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        check_rotation(&rotation, ORTHONORMAL_TOL).map_err(GeometryError::InvalidPose)?;
        let norm = translation.norm();
        if !(norm >= 1e-12) || !norm.is_finite() {
            return Err(GeometryError::DegenerateTranslation);
        }
        Ok(Self {
            rotation,
            translation_direction: translation / norm,
        })
    }

    pub fn from_pose(pose: &RigidPose) -> Result<Self, GeometryError> {
        Self::new(*pose.rotation(), *pose.translation())
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation_direction(&self) -> &Vector3<f64> {
        &self.translation_direction
    }
}

/// An image with the geometry needed to warp it into another view.
#[derive(Debug, Clone)]
pub struct PosedView {
    pub id: String,
    pub image: Option<Image>,
    pub depth: Option<DepthMap>,
    pub intrinsics: CameraIntrinsics,
    pub pose: Option<RigidPose>,
}

impl PosedView {
    pub fn new(
        id: impl Into<String>,
        intrinsics: CameraIntrinsics,
        pose: RigidPose,
        depth: DepthMap,
    ) -> Self {
        Self {
            id: id.into(),
            image: None,
            depth: Some(depth),
            intrinsics,
            pose: Some(pose),
        }
    }

    pub fn with_image(mut self, image: Image) -> Self {
        self.image = Some(image);
        self
    }

    pub(crate) fn geometry(&self) -> Result<(&DepthMap, &RigidPose), GeometryError> {
        match (&self.depth, &self.pose) {
            (Some(d), Some(p)) => Ok((d, p)),
            _ => Err(GeometryError::GeometryMissing(self.id.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 50.0, 40.0, 100, 80).unwrap()
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 5.0, 5.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 10.0, 5.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 5.0, 0.0, 10, 10).is_err());
        k().validate().unwrap();
    }

    #[test]
    fn unproject_project_round_trip() {
        let p = PixelPoint::new(12.5, 70.25);
        let x = k().unproject(p, 3.0);
        assert_eq!(x.z, 3.0);
        let q = k().project(&x);
        assert!(p.distance(&q) < 1e-12);
    }

    #[test]
    fn pose_rejects_non_orthonormal() {
        let mut r = Matrix3::identity();
        r[(0, 1)] = 1e-6;
        assert!(RigidPose::new(r, Vector3::zeros()).is_err());
        assert!(RigidPose::nearest(r, Vector3::zeros()).is_ok());
        assert!(RigidPose::new(-Matrix3::identity(), Vector3::zeros()).is_err());
    }

    #[test]
    fn relative_pose_composes() {
        let r = nalgebra::Rotation3::from_euler_angles(0.1, -0.2, 0.3).into_inner();
        let left = RigidPose::new(r, Vector3::new(1.0, 2.0, 3.0)).unwrap();
        let right = RigidPose::new(r.transpose(), Vector3::new(-1.0, 0.5, 0.0)).unwrap();
        let rel = RigidPose::relative(&left, &right);
        let world = Vector3::new(0.3, -0.7, 4.0);
        let via_rel = rel.transform(&left.transform(&world));
        assert!((via_rel - right.transform(&world)).norm() < 1e-12);
    }

    #[test]
    fn bilinear_sampling_rules() {
        let d = DepthMap::new(3, 2, vec![1.0, 2.0, 0.0, 1.0, 2.0, 5.0]).unwrap();
        assert_eq!(d.sample_bilinear(PixelPoint::new(1.0, 0.0)), Some(2.0));
        assert_eq!(d.sample_bilinear(PixelPoint::new(0.5, 0.0)), Some(1.5));
        // (2,0) holds 0: any sample with weight on it is invalid.
        assert_eq!(d.sample_bilinear(PixelPoint::new(1.5, 0.5)), None);
        // Integer sample next to an invalid neighbor only touches itself.
        assert_eq!(d.sample_bilinear(PixelPoint::new(1.0, 1.0)), Some(2.0));
        assert_eq!(d.sample_bilinear(PixelPoint::new(2.0, 1.0)), Some(5.0));
        assert_eq!(d.sample_bilinear(PixelPoint::new(-0.1, 0.0)), None);
        assert_eq!(d.sample_bilinear(PixelPoint::new(0.0, 1.01)), None);
    }

    #[test]
    fn depth_map_rejects_bad_input() {
        assert!(DepthMap::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DepthMap::new(1, 1, vec![f64::NAN]).is_err());
        assert!(DepthMap::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn planar_transform_invariants() {
        let mut m = Matrix3::identity();
        m[(2, 0)] = 0.1;
        assert!(PlanarTransform::new(TransformKind::Affine, m).is_err());
        assert!(PlanarTransform::new(TransformKind::Homography, m).is_ok());
        assert!(PlanarTransform::new(TransformKind::Homography, Matrix3::zeros()).is_err());
        let t = PlanarTransform::translation(3.0, 4.0);
        let p = t.apply(PixelPoint::new(1.0, 1.0));
        assert_eq!(p, PixelPoint::new(4.0, 5.0));
        assert_eq!(t.inverse().apply(p), PixelPoint::new(1.0, 1.0));
    }

    #[test]
    fn rotation_about_center_cycles_corners() {
        let r = PlanarTransform::rotation_about(90.0, PixelPoint::new(49.5, 49.5));
        let p = r.apply(PixelPoint::new(0.0, 0.0));
        assert!(p.distance(&PixelPoint::new(99.0, 0.0)) < 1e-12);
    }

    #[test]
    fn correspondence_confidence_range() {
        let p = PixelPoint::new(0.0, 0.0);
        assert!(Correspondence::new(p, p, 1.5).is_err());
        assert!(Correspondence::new(p, p, -0.1).is_err());
        assert!(Correspondence::new(p, p, 0.0).is_ok());
    }

    #[test]
    fn relative_pose_estimate_normalizes() {
        let e = RelativePoseEstimate::new(Matrix3::identity(), Vector3::new(0.0, 3.0, 4.0)).unwrap();
        assert!((e.translation_direction().norm() - 1.0).abs() < 1e-12);
        assert_eq!(
            RelativePoseEstimate::new(Matrix3::identity(), Vector3::zeros()),
            Err(GeometryError::DegenerateTranslation)
        );
    }
}

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::types::RelativePoseEstimate;
use super::GeometryError;

/// Angular pose errors in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub rotation_deg: f64,
    pub translation_deg: f64,
    /// `max(rotation_deg, translation_deg)`.
    pub combined_deg: f64,
}

/// Geodesic angle between two rotations.
pub fn rotation_error_deg(est: &Matrix3<f64>, gt: &Matrix3<f64>) -> f64 {
    let cos = (((est.transpose() * gt).trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Angle between two translation directions; scale-invariant.
pub fn translation_angle_deg(est: &Vector3<f64>, gt: &Vector3<f64>) -> Result<f64, GeometryError> {
    let (ne, ng) = (est.norm(), gt.norm());
    if !(ne >= 1e-12 && ng >= 1e-12) {
        return Err(GeometryError::DegenerateTranslation);
    }
    let cos = (est.dot(gt) / (ne * ng)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

pub fn relative_pose_error(
    est: &RelativePoseEstimate,
    gt: &RelativePoseEstimate,
) -> Result<PoseError, GeometryError> {
    let rotation_deg = rotation_error_deg(est.rotation(), gt.rotation());
    let translation_deg =
        translation_angle_deg(est.translation_direction(), gt.translation_direction())?;
    Ok(PoseError {
        rotation_deg,
        translation_deg,
        combined_deg: rotation_deg.max(translation_deg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;

    fn rot(axis: [f64; 3], deg: f64) -> Matrix3<f64> {
        Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::from(axis)), deg.to_radians())
            .into_inner()
    }

    #[test]
    fn identical_poses() {
        let p = RelativePoseEstimate::new(rot([1.0, 2.0, 3.0], 33.0), Vector3::new(1.0, 0.0, 0.5)).unwrap();
        let e = relative_pose_error(&p, &p).unwrap();
        assert!(e.rotation_deg < 1e-6 && e.translation_deg < 1e-6 && e.combined_deg < 1e-6);
    }

    #[test]
    fn ten_degrees_about_z() {
        let t = Vector3::new(0.0, 0.0, 1.0);
        let est = RelativePoseEstimate::new(rot([0.0, 0.0, 1.0], 10.0), t).unwrap();
        let gt = RelativePoseEstimate::new(Matrix3::identity(), t).unwrap();
        let e = relative_pose_error(&est, &gt).unwrap();
        assert!((e.rotation_deg - 10.0).abs() < 1e-9);
        assert_eq!(e.combined_deg, e.rotation_deg);
    }

    #[test]
    fn orthogonal_translations() {
        let a = translation_angle_deg(&Vector3::x(), &Vector3::y()).unwrap();
        assert!((a - 90.0).abs() < 1e-12);
        assert_eq!(
            translation_angle_deg(&Vector3::zeros(), &Vector3::y()),
            Err(GeometryError::DegenerateTranslation)
        );
    }

    #[test]
    fn clamps_acos_argument() {
        let a = Vector3::new(1.0, 1e-17, 0.0);
        assert_eq!(translation_angle_deg(&a, &(a * 3.0)).unwrap(), 0.0);
        let r = rot([0.3, 0.1, 0.9], 1e-9);
        assert!(rotation_error_deg(&r, &r).is_finite());
    }

    fn arb_rotation() -> impl Strategy<Value = Matrix3<f64>> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..180.0f64).prop_filter_map(
            "zero axis",
            |(x, y, z, deg)| {
                let axis = Vector3::new(x, y, z);
                (axis.norm() > 1e-3).then(|| rot([x, y, z], deg))
            },
        )
    }

    proptest! {
        #[test]
        fn rotation_error_symmetric_and_left_invariant(a in arb_rotation(), b in arb_rotation(), q in arb_rotation()) {
            let ab = rotation_error_deg(&a, &b);
            prop_assert!((ab - rotation_error_deg(&b, &a)).abs() < 1e-5);
            prop_assert!((ab - rotation_error_deg(&(q * a), &(q * b))).abs() < 1e-5);
            prop_assert!((0.0..=180.0).contains(&ab));
        }

        #[test]
        fn translation_error_scale_invariant(
            v in prop::array::uniform3(-5.0..5.0f64),
            w in prop::array::uniform3(-5.0..5.0f64),
            s in 0.01..100.0f64,
        ) {
            let (v, w) = (Vector3::from(v), Vector3::from(w));
            prop_assume!(v.norm() > 1e-3 && w.norm() > 1e-3);
            let base = translation_angle_deg(&v, &w).unwrap();
            prop_assert!((base - translation_angle_deg(&(v * s), &w).unwrap()).abs() < 1e-5);
            prop_assert!((base - translation_angle_deg(&v, &(w * s)).unwrap()).abs() < 1e-5);
        }
    }
}

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3};

use super::RobustError;
use crate::geometry::{CameraIntrinsics, Correspondence, PixelPoint, RelativePoseEstimate};

/// The four `(R, t)` candidates of an essential matrix, `t` unit length.
pub fn decompose_essential(e: &Matrix3<f64>) -> [(Matrix3<f64>, Vector3<f64>); 4] {
    let svd = e.svd(true, true);
    let mut u = svd.u.expect("requested U");
    let mut v_t = svd.v_t.expect("requested V^T");
    // Sort so the null direction is the third column.
    let sv = svd.singular_values;
    let imin = sv.imin();
    if imin != 2 {
        u.swap_columns(imin, 2);
        v_t.swap_rows(imin, 2);
    }
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
    }
    if v_t.determinant() < 0.0 {
        v_t.row_mut(2).neg_mut();
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = u * w * v_t;
    let r2 = u * w.transpose() * v_t;
    let t: Vector3<f64> = u.column(2).into_owned().normalize();
    [(r1, t), (r1, -t), (r2, t), (r2, -t)]
}

/// Linear (DLT) triangulation of one normalized correspondence, returned in
/// the left camera frame. `None` for points at infinity.
pub fn triangulate(r: &Matrix3<f64>, t: &Vector3<f64>, left: PixelPoint, right: PixelPoint) -> Option<Vector3<f64>> {
    let p0 = Matrix3x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let mut p1 = Matrix3x4::zeros();
    p1.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    p1.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
    let mut a = Matrix4::zeros();
    a.set_row(0, &(p0.row(2) * left.x - p0.row(0)));
    a.set_row(1, &(p0.row(2) * left.y - p0.row(1)));
    a.set_row(2, &(p1.row(2) * right.x - p1.row(0)));
    a.set_row(3, &(p1.row(2) * right.y - p1.row(1)));
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let x = v_t.row(svd.singular_values.imin()).transpose();
    if x[3].abs() < 1e-12 {
        return None;
    }
    let p = Vector3::new(x[0], x[1], x[2]) / x[3];
    p.iter().all(|v| v.is_finite()).then_some(p)
}

/// Pose from an essential matrix and normalized correspondences.
///
/// Picks the candidate with the most triangulated points in front of both
/// cameras and fails when that candidate covers at most half the points.
pub fn recover_pose_normalized(
    e: &Matrix3<f64>,
    left: &[PixelPoint],
    right: &[PixelPoint],
) -> Result<RelativePoseEstimate, RobustError> {
    let n = left.len().min(right.len());
    if n == 0 {
        return Err(RobustError::InsufficientData { need: 1, got: 0 });
    }
    let mut best = (0usize, 0usize);
    let candidates = decompose_essential(e);
    for (k, (r, t)) in candidates.iter().enumerate() {
        let count = (0..n)
            .filter(|&i| {
                triangulate(r, t, left[i], right[i]).is_some_and(|x| x.z > 0.0 && (r * x + t).z > 0.0)
            })
            .count();
        if count > best.0 {
            best = (count, k);
        }
    }
    if best.0 * 2 <= n {
        return Err(RobustError::CheiralityAmbiguous { best: best.0, total: n });
    }
    let (r, t) = candidates[best.1];
    Ok(RelativePoseEstimate::new(r, t)?)
}

/// Pose from an essential matrix and pixel correspondences.
pub fn recover_pose(
    e: &Matrix3<f64>,
    corrs: &[Correspondence],
    intrinsics: (&CameraIntrinsics, &CameraIntrinsics),
) -> Result<RelativePoseEstimate, RobustError> {
    let (kl, kr) = intrinsics;
    let left: Vec<_> = corrs.iter().map(|c| kl.normalize(c.left)).collect();
    let right: Vec<_> = corrs.iter().map(|c| kr.normalize(c.right)).collect();
    recover_pose_normalized(e, &left, &right)
}

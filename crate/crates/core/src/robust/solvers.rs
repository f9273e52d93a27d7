use nalgebra::{DMatrix, Matrix3, Vector3};

use super::linear::{apply, frobenius_normalize, hartley, null_vector, well_conditioned};
use super::RobustError;
use crate::geometry::{CameraIntrinsics, Correspondence, PixelPoint, PlanarTransform, TransformKind};

fn need(corrs: &[Correspondence], n: usize) -> Result<(), RobustError> {
    if corrs.len() < n {
        return Err(RobustError::InsufficientData {
            need: n,
            got: corrs.len(),
        });
    }
    Ok(())
}

fn degenerate(msg: &str) -> RobustError {
    RobustError::DegenerateConfiguration(msg.to_string())
}

fn lefts(corrs: &[Correspondence]) -> Vec<PixelPoint> {
    corrs.iter().map(|c| c.left).collect()
}

fn rights(corrs: &[Correspondence]) -> Vec<PixelPoint> {
    corrs.iter().map(|c| c.right).collect()
}

/// Least-squares affine map minimizing `sum |A x_l - x_r|^2`.
pub fn solve_affine_lsq(corrs: &[Correspondence]) -> Result<PlanarTransform, RobustError> {
    need(corrs, 3)?;
    let left = lefts(corrs);
    let t = hartley(&left).ok_or_else(|| degenerate("coincident points"))?;
    let normalized: Vec<PixelPoint> = left.iter().map(|&p| apply(&t, p)).collect();

    // Second-moment matrix of the normalized (zero-mean) points.
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &normalized {
        sxx += p.x * p.x;
        sxy += p.x * p.y;
        syy += p.y * p.y;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = ((tr * tr / 4.0) - det).max(0.0).sqrt();
    let (lmax, lmin) = (tr / 2.0 + disc, tr / 2.0 - disc);
    if !(lmin > 1e-9 * lmax) {
        return Err(degenerate("collinear points"));
    }

    let n = corrs.len();
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => normalized[i].x,
        1 => normalized[i].y,
        _ => 1.0,
    });
    let b = DMatrix::from_fn(n, 2, |i, j| if j == 0 { corrs[i].right.x } else { corrs[i].right.y });
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(degenerate)?;
    let m = Matrix3::new(
        sol[(0, 0)], sol[(1, 0)], sol[(2, 0)],
        sol[(0, 1)], sol[(1, 1)], sol[(2, 1)],
        0.0, 0.0, 1.0,
    ) * t;
    let mut m = m;
    m[(2, 0)] = 0.0;
    m[(2, 1)] = 0.0;
    m[(2, 2)] = 1.0;
    PlanarTransform::new(TransformKind::Affine, m).map_err(|_| degenerate("singular affine"))
}

fn collinear(a: PixelPoint, b: PixelPoint, c: PixelPoint) -> bool {
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let scale = a.distance(&b).max(a.distance(&c)).max(b.distance(&c));
    cross.abs() <= 1e-9 * scale * scale
}

fn any_three_collinear(p: &[PixelPoint]) -> bool {
    let n = p.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if collinear(p[i], p[j], p[k]) {
                    return true;
                }
            }
        }
    }
    false
}

/// Hartley-normalized DLT. The result is scaled to unit Frobenius norm with
/// a positive bottom-right entry when that entry is not ~0.
pub fn solve_homography_dlt(corrs: &[Correspondence]) -> Result<PlanarTransform, RobustError> {
    need(corrs, 4)?;
    let (left, right) = (lefts(corrs), rights(corrs));
    if corrs.len() == 4 && (any_three_collinear(&left) || any_three_collinear(&right)) {
        return Err(degenerate("three collinear points in a minimal sample"));
    }
    let tl = hartley(&left).ok_or_else(|| degenerate("coincident points"))?;
    let tr = hartley(&right).ok_or_else(|| degenerate("coincident points"))?;
    let n = corrs.len();
    let mut a = DMatrix::zeros(2 * n, 9);
    for i in 0..n {
        let p = apply(&tl, left[i]);
        let q = apply(&tr, right[i]);
        let r0 = [-p.x, -p.y, -1.0, 0.0, 0.0, 0.0, q.x * p.x, q.x * p.y, q.x];
        let r1 = [0.0, 0.0, 0.0, -p.x, -p.y, -1.0, q.y * p.x, q.y * p.y, q.y];
        for j in 0..9 {
            a[(2 * i, j)] = r0[j];
            a[(2 * i + 1, j)] = r1[j];
        }
    }
    let (h, sv) = null_vector(&a);
    if !well_conditioned(&sv, 1) {
        return Err(degenerate("rank-deficient homography system"));
    }
    let hn = Matrix3::from_row_slice(h.as_slice());
    let tr_inv = tr.try_inverse().ok_or_else(|| degenerate("normalization"))?;
    let mut m = frobenius_normalize(tr_inv * hn * tl);
    if m[(2, 2)].abs() > 1e-12 && m[(2, 2)] < 0.0 {
        m = -m;
    }
    // Singular-ness is judged on the conditioned matrix, not the pixel one.
    if hn.determinant().abs() < 1e-9 {
        return Err(degenerate("singular homography"));
    }
    PlanarTransform::new(TransformKind::Homography, m).map_err(|_| degenerate("singular homography"))
}

/// Normalized 8-point solver.
///
/// With `essential = None` returns a rank-2 fundamental matrix on pixel
/// coordinates. With both intrinsics, points are mapped through `K^-1` and
/// the result is projected to singular values `(s, s, 0)`. Output has unit
/// Frobenius norm.
pub fn solve_epipolar_8pt(
    corrs: &[Correspondence],
    essential: Option<(&CameraIntrinsics, &CameraIntrinsics)>,
) -> Result<Matrix3<f64>, RobustError> {
    need(corrs, 8)?;
    match essential {
        None => eight_point(&lefts(corrs), &rights(corrs), false),
        Some((kl, kr)) => {
            let l: Vec<_> = corrs.iter().map(|c| kl.normalize(c.left)).collect();
            let r: Vec<_> = corrs.iter().map(|c| kr.normalize(c.right)).collect();
            eight_point(&l, &r, true)
        }
    }
}

pub(crate) fn eight_point(
    left: &[PixelPoint],
    right: &[PixelPoint],
    essential: bool,
) -> Result<Matrix3<f64>, RobustError> {
    let tl = hartley(left).ok_or_else(|| degenerate("coincident points"))?;
    let tr = hartley(right).ok_or_else(|| degenerate("coincident points"))?;
    let n = left.len();
    let mut a = DMatrix::zeros(n, 9);
    for i in 0..n {
        let p = apply(&tl, left[i]);
        let q = apply(&tr, right[i]);
        let row = [q.x * p.x, q.x * p.y, q.x, q.y * p.x, q.y * p.y, q.y, p.x, p.y, 1.0];
        for (j, v) in row.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    let (f, sv) = null_vector(&a);
    if !well_conditioned(&sv, 1) {
        return Err(degenerate("epipolar design matrix has a multi-dimensional null space"));
    }
    let fn_ = Matrix3::from_row_slice(f.as_slice());
    let svd = fn_.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut s = svd.singular_values;
    let imin = s.imin();
    s[imin] = 0.0;
    let rank2 = u * Matrix3::from_diagonal(&s) * v_t;
    let denorm = tr.transpose() * rank2 * tl;
    if !essential {
        return Ok(frobenius_normalize(denorm));
    }
    let svd = denorm.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let s = svd.singular_values;
    let imin = s.imin();
    let mut d = Vector3::new(1.0, 1.0, 1.0);
    d[imin] = 0.0;
    Ok(frobenius_normalize(u * Matrix3::from_diagonal(&d) * v_t))
}

/// First-order geometric distance of a match to the epipolar model
/// `x_r^T F x_l = 0`, in the units of the coordinates.
pub fn sampson_distance(f: &Matrix3<f64>, left: PixelPoint, right: PixelPoint) -> f64 {
    let x = left.homogeneous();
    let xp = right.homogeneous();
    let fx = f * x;
    let ftxp = f.transpose() * xp;
    let num = xp.dot(&fx);
    let den = fx.x * fx.x + fx.y * fx.y + ftxp.x * ftxp.x + ftxp.y * ftxp.y;
    if den <= 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    num.abs() / den.sqrt()
}

/// `max(|H x_l - x_r|, |H^-1 x_r - x_l|)`.
pub fn symmetric_transfer_error(h: &PlanarTransform, inv: &PlanarTransform, c: &Correspondence) -> f64 {
    let fwd = h.apply(c.left).distance(&c.right);
    let bwd = inv.apply(c.right).distance(&c.left);
    let e = fwd.max(bwd);
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

//! Shared linear-algebra helpers for the DLT-style solvers.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::geometry::PixelPoint;

/// Similarity that moves the centroid to the origin and scales the mean
/// distance to `sqrt(2)`. Returns `None` when all points coincide.
pub(crate) fn hartley(points: &[PixelPoint]) -> Option<Matrix3<f64>> {
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    let (mx, my) = (mx / n, my / n);
    let mean_dist = points
        .iter()
        .map(|p| (p.x - mx).hypot(p.y - my))
        .sum::<f64>()
        / n;
    if !(mean_dist > 1e-300) || !mean_dist.is_finite() {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Some(Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0))
}

pub(crate) fn apply(t: &Matrix3<f64>, p: PixelPoint) -> PixelPoint {
    let v = t * p.homogeneous();
    PixelPoint::new(v.x / v.z, v.y / v.z)
}

/// Right singular vector of the smallest singular value together with all
/// singular values sorted ascending. Pads wide systems with zero rows so the
/// full right null space is available.
pub(crate) fn null_vector(a: &DMatrix<f64>) -> (DVector<f64>, Vec<f64>) {
    let cols = a.ncols();
    let padded;
    let a = if a.nrows() < cols {
        let mut m = DMatrix::zeros(cols, cols);
        m.rows_mut(0, a.nrows()).copy_from(a);
        padded = m;
        &padded
    } else {
        a
    };
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let null = v_t.row(order[0]).transpose();
    (null, order.iter().map(|&i| sv[i]).collect())
}

/// Relative rank check: the `k`-th smallest singular value relative to the
/// largest must exceed `1e-9`.
pub(crate) fn well_conditioned(sorted_sv: &[f64], k: usize) -> bool {
    let max = *sorted_sv.last().unwrap_or(&0.0);
    max > 0.0 && sorted_sv.get(k).is_some_and(|&s| s / max > 1e-9)
}

pub(crate) fn frobenius_normalize(mut m: Matrix3<f64>) -> Matrix3<f64> {
    let n = m.norm();
    if n > 0.0 {
        m /= n;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hartley_normalizes() {
        let pts: Vec<_> = [(10.0, 10.0), (20.0, 10.0), (10.0, 30.0), (25.0, 22.0)]
            .iter()
            .map(|&(x, y)| PixelPoint::new(x, y))
            .collect();
        let t = hartley(&pts).unwrap();
        let q: Vec<_> = pts.iter().map(|&p| apply(&t, p)).collect();
        let cx: f64 = q.iter().map(|p| p.x).sum::<f64>() / 4.0;
        let md: f64 = q.iter().map(|p| p.x.hypot(p.y)).sum::<f64>() / 4.0;
        assert!(cx.abs() < 1e-12);
        assert!((md - 2f64.sqrt()).abs() < 1e-12);
        assert!(hartley(&[PixelPoint::new(1.0, 1.0); 3]).is_none());
    }

    #[test]
    fn null_vector_of_wide_system() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let (v, sv) = null_vector(&a);
        assert!((a * &v).norm() < 1e-12);
        assert_eq!(sv.len(), 3);
        assert!(sv[0].abs() < 1e-12);
    }
}

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::geometry::{PixelPoint, PlanarTransform};

/// Mean distance between the four image corners mapped by `est` and `gt`.
pub fn corner_warp_error(est: &PlanarTransform, gt: &PlanarTransform, width: u32, height: u32) -> Result<f64, EvalError> {
    let (w, h) = ((width.max(1) - 1) as f64, (height.max(1) - 1) as f64);
    let corners = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)];
    let mut sum = 0.0;
    for (x, y) in corners {
        let p = PixelPoint::new(x, y);
        let (a, b) = (est.try_apply(p), gt.try_apply(p));
        let (Some(a), Some(b)) = (a, b) else { return Err(EvalError::DegenerateTransform) };
        sum += a.distance(&b);
    }
    Ok(sum / 4.0)
}

/// Median; an even count averages the two central values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// `(mean, median)` of landmark errors divided by the diagonal `d_j`.
pub fn rtre(
    landmarks: &[(PixelPoint, PixelPoint)],
    diagonal: f64,
    warp: impl Fn(PixelPoint) -> PixelPoint,
) -> Result<(f64, f64), EvalError> {
    if landmarks.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let errs: Vec<f64> = landmarks.iter().map(|(s, t)| warp(*s).distance(t) / diagonal).collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    Ok((mean, median(&errs).expect("non-empty")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtreAggregates {
    pub average_artre: f64,
    pub median_artre: f64,
    pub average_mrtre: f64,
    pub median_mrtre: f64,
}

/// Average and median over pairs of the per-pair ArTRE and MrTRE. Failed
/// pairs (`None`) count as 1.0 for both.
pub fn aggregate_rtre(pairs: &[Option<(f64, f64)>]) -> Result<RtreAggregates, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let a: Vec<f64> = pairs.iter().map(|p| p.map_or(1.0, |v| v.0)).collect();
    let m: Vec<f64> = pairs.iter().map(|p| p.map_or(1.0, |v| v.1)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(RtreAggregates {
        average_artre: mean(&a),
        median_artre: median(&a).expect("non-empty"),
        average_mrtre: mean(&m),
        median_mrtre: median(&m).expect("non-empty"),
    })
}

fn check(errors: &[Option<f64>], threshold: f64) -> Result<(), EvalError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    if errors.is_empty() {
        return Err(EvalError::EmptySet);
    }
    Ok(())
}

/// Fraction of errors strictly below `threshold`; `None` marks a failure.
pub fn success_rate(errors: &[Option<f64>], threshold: f64) -> Result<f64, EvalError> {
    check(errors, threshold)?;
    let ok = errors.iter().filter(|e| e.is_some_and(|e| e < threshold)).count();
    Ok(ok as f64 / errors.len() as f64)
}

/// Normalized area under the success curve on `[0, threshold]`:
/// `sum(max(0, t - e)) / (n t)`.
pub fn auc(errors: &[Option<f64>], threshold: f64) -> Result<f64, EvalError> {
    check(errors, threshold)?;
    let area: f64 = errors
        .iter()
        .map(|e| e.map_or(0.0, |e| (threshold - e).max(0.0)))
        .sum();
    Ok(area / (errors.len() as f64 * threshold))
}

/// Success rate sampled at `step, 2 step, ..` up to `max`, merged with the
/// `extra` thresholds, ascending.
pub fn success_curve(errors: &[Option<f64>], step: f64, max: f64, extra: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    if !(step > 0.0) {
        return Err(EvalError::InvalidThreshold(step));
    }
    let mut ts: Vec<f64> = (1..)
        .map(|k| k as f64 * step)
        .take_while(|t| *t <= max + 1e-9)
        .chain(extra.iter().copied())
        .collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    ts.into_iter().map(|t| Ok((t, success_rate(errors, t)?))).collect()
}

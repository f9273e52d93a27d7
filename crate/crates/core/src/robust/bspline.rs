use serde::{Deserialize, Serialize};

use super::RobustError;
use crate::geometry::{Correspondence, PixelPoint, PlanarTransform};

/// Cubic uniform B-spline basis at local coordinate `t`.
fn basis(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0,
        (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0,
        t * t * t / 6.0,
    ]
}

/// First support index and weights along one axis. Queries outside the
/// grid reuse the nearest interior support and extrapolate its cubic pieces,
/// so weights still sum to one.
fn axis(coord: f64, origin: f64, spacing: f64, n: usize) -> (usize, [f64; 4]) {
    let u = (coord - origin) / spacing;
    let i0 = (u.floor() as i64).clamp(1, n as i64 - 3);
    (i0 as usize - 1, basis(u - i0 as f64))
}

/// Dense grid of control-point displacements (pixels) on a regular lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineField {
    pub gx: usize,
    pub gy: usize,
    pub spacing: [f64; 2],
    /// Position of control point `(0, 0)`.
    pub origin: [f64; 2],
    /// Row-major, `displacements[j * gx + i]`.
    pub displacements: Vec<[f64; 2]>,
}

impl BSplineField {
    pub fn new(gx: usize, gy: usize, spacing: [f64; 2], origin: [f64; 2]) -> Result<Self, RobustError> {
        let field = Self {
            gx,
            gy,
            spacing,
            origin,
            displacements: vec![[0.0; 2]; gx.saturating_mul(gy)],
        };
        field.validate()?;
        Ok(field)
    }

    /// Zero field whose interior spans `[0, width] x [0, height]`, with one
    /// extra control ring on each side.
    pub fn covering(width: f64, height: f64, gx: usize, gy: usize) -> Result<Self, RobustError> {
        if gx < 4 || gy < 4 {
            return Err(RobustError::InvalidConfig("control grid must be at least 4x4".into()));
        }
        let sx = width / (gx - 3) as f64;
        let sy = height / (gy - 3) as f64;
        Self::new(gx, gy, [sx, sy], [-sx, -sy])
    }

    pub fn validate(&self) -> Result<(), RobustError> {
        if self.gx < 4 || self.gy < 4 {
            return Err(RobustError::InvalidConfig("control grid must be at least 4x4".into()));
        }
        if !self.spacing.iter().all(|s| *s > 0.0 && s.is_finite()) || !self.origin.iter().all(|o| o.is_finite()) {
            return Err(RobustError::InvalidConfig("spacing must be positive and finite".into()));
        }
        if self.displacements.len() != self.gx * self.gy {
            return Err(RobustError::InvalidConfig("displacement count does not match the grid".into()));
        }
        if !self.displacements.iter().flatten().all(|d| d.is_finite()) {
            return Err(RobustError::InvalidConfig("non-finite displacement".into()));
        }
        Ok(())
    }

    pub fn control_position(&self, i: usize, j: usize) -> PixelPoint {
        PixelPoint::new(
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
        )
    }

    /// The 16 `(control index, weight)` pairs influencing `p`.
    pub fn weights(&self, p: PixelPoint) -> [(usize, f64); 16] {
        let (ix, wx) = axis(p.x, self.origin[0], self.spacing[0], self.gx);
        let (iy, wy) = axis(p.y, self.origin[1], self.spacing[1], self.gy);
        let mut out = [(0, 0.0); 16];
        for b in 0..4 {
            for a in 0..4 {
                out[b * 4 + a] = ((iy + b) * self.gx + ix + a, wx[a] * wy[b]);
            }
        }
        out
    }

    pub fn displacement(&self, p: PixelPoint) -> [f64; 2] {
        let mut d = [0.0; 2];
        for (k, w) in self.weights(p) {
            d[0] += w * self.displacements[k][0];
            d[1] += w * self.displacements[k][1];
        }
        d
    }
}

/// `p` plus the interpolated field displacement at `p`.
pub fn evaluate_bspline(field: &BSplineField, p: PixelPoint) -> PixelPoint {
    let d = field.displacement(p);
    PixelPoint::new(p.x + d[0], p.y + d[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSplineConfig {
    pub grid: (usize, usize),
    pub learning_rate: f64,
    pub iterations: usize,
    /// Consecutive loss increases tolerated before reporting divergence.
    pub patience: usize,
}

impl Default for BSplineConfig {
    fn default() -> Self {
        Self {
            grid: (8, 8),
            learning_rate: 0.1,
            iterations: 2000,
            patience: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineFit {
    pub field: BSplineField,
    pub init: PlanarTransform,
    /// Mean squared residual before each step, then after the last one.
    pub loss_history: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Mean Euclidean residual in pixels.
    pub initial_mean_error: f64,
    pub final_mean_error: f64,
}

impl BSplineFit {
    /// Full non-rigid warp `field(init(p))`.
    pub fn apply(&self, p: PixelPoint) -> PixelPoint {
        evaluate_bspline(&self.field, self.init.apply(p))
    }
}

/// Mean squared residual of `field(init(x_l)) - x_r` and its gradient with
/// respect to every control displacement.
pub fn bspline_objective(
    field: &BSplineField,
    init: &PlanarTransform,
    corrs: &[Correspondence],
) -> (f64, Vec<[f64; 2]>) {
    let n = corrs.len().max(1) as f64;
    let mut grad = vec![[0.0; 2]; field.displacements.len()];
    let mut loss = 0.0;
    for c in corrs {
        let a = init.apply(c.left);
        let w = field.weights(a);
        let mut d = [0.0; 2];
        for &(k, wk) in &w {
            d[0] += wk * field.displacements[k][0];
            d[1] += wk * field.displacements[k][1];
        }
        let r = [a.x + d[0] - c.right.x, a.y + d[1] - c.right.y];
        loss += r[0] * r[0] + r[1] * r[1];
        for &(k, wk) in &w {
            grad[k][0] += 2.0 * wk * r[0] / n;
            grad[k][1] += 2.0 * wk * r[1] / n;
        }
    }
    (loss / n, grad)
}

fn mean_error(fit_field: &BSplineField, init: &PlanarTransform, corrs: &[Correspondence]) -> f64 {
    let sum: f64 = corrs
        .iter()
        .map(|c| evaluate_bspline(fit_field, init.apply(c.left)).distance(&c.right))
        .sum();
    sum / corrs.len() as f64
}

/// Fits a control grid covering `extent` (target image width, height) by
/// full-batch gradient descent from a zero field.
///
/// Each control's gradient is divided by its total basis mass over the
/// correspondences, which makes the step scale-free (pixels per step) and
/// stable for learning rates below 2. Controls without support stay zero.
/// The lowest-loss field seen is returned.
pub fn fit_bspline_sgd(
    corrs: &[Correspondence],
    init: &PlanarTransform,
    extent: (f64, f64),
    cfg: &BSplineConfig,
) -> Result<BSplineFit, RobustError> {
    if corrs.is_empty() {
        return Err(RobustError::InsufficientData { need: 1, got: 0 });
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) || cfg.patience == 0 {
        return Err(RobustError::InvalidConfig("learning rate and patience must be positive".into()));
    }
    let mut field = BSplineField::covering(extent.0, extent.1, cfg.grid.0, cfg.grid.1)?;

    let n = corrs.len() as f64;
    let mut mass = vec![0.0; field.displacements.len()];
    for c in corrs {
        for (k, w) in field.weights(init.apply(c.left)) {
            mass[k] += 2.0 * w / n;
        }
    }

    let mut history = Vec::with_capacity(cfg.iterations + 1);
    let (initial_loss, mut grad) = bspline_objective(&field, init, corrs);
    history.push(initial_loss);
    let initial_mean_error = mean_error(&field, init, corrs);
    let mut best = (initial_loss, field.clone());
    let mut rising = 0;
    let mut prev = initial_loss;
    for step in 1..=cfg.iterations {
        for ((d, g), m) in field.displacements.iter_mut().zip(&grad).zip(&mass) {
            if m.abs() > 1e-12 {
                d[0] -= cfg.learning_rate * g[0] / m;
                d[1] -= cfg.learning_rate * g[1] / m;
            }
        }
        let (loss, g) = bspline_objective(&field, init, corrs);
        grad = g;
        history.push(loss);
        if !loss.is_finite() {
            return Err(RobustError::Diverged(step));
        }
        rising = if loss > prev { rising + 1 } else { 0 };
        if rising >= cfg.patience {
            return Err(RobustError::Diverged(step));
        }
        prev = loss;
        if loss < best.0 {
            best = (loss, field.clone());
        }
    }
    let (final_loss, field) = best;
    Ok(BSplineFit {
        final_mean_error: mean_error(&field, init, corrs),
        field,
        init: *init,
        loss_history: history,
        initial_loss,
        final_loss,
        initial_mean_error,
    })
}

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{aggregate_rtre, auc, success_curve, success_rate, RtreAggregates};
use super::EvalError;
use crate::geometry::PoseError;
use crate::io::{IoError, Provenance};

pub const SCHEMA_VERSION: &str = "xmr-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    WarpPx,
    Rtre,
    PoseDeg,
}

/// Outcome of one evaluated pair. `error` is `None` for failed pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub pair_id: String,
    pub kind: ErrorKind,
    pub error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtre: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<PoseError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inliers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ErrorSample {
    pub fn failed(pair_id: &str, kind: ErrorKind, reason: impl Into<String>) -> Self {
        Self {
            pair_id: pair_id.to_string(),
            kind,
            error: None,
            rtre: None,
            pose: None,
            inliers: None,
            failure: Some(reason.into()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdValue {
    pub threshold: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema: String,
    pub protocol: String,
    pub error_kind: ErrorKind,
    pub pairs: usize,
    pub failed: usize,
    pub success_rate: Vec<ThresholdValue>,
    pub auc: Vec<ThresholdValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtre: Option<RtreAggregates>,
    pub curve: Vec<CurvePoint>,
    pub samples: Vec<ErrorSample>,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl MetricReport {
    /// Aggregates `samples` (in their given order) at `thresholds`.
    pub fn build(
        protocol: &str,
        kind: ErrorKind,
        samples: Vec<ErrorSample>,
        thresholds: &[f64],
        curve_step: f64,
        config: serde_json::Value,
    ) -> Result<Self, EvalError> {
        if samples.is_empty() {
            return Err(EvalError::EmptySet);
        }
        let errors: Vec<Option<f64>> = samples.iter().map(|s| s.error).collect();
        let mut ts = thresholds.to_vec();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let at = |f: fn(&[Option<f64>], f64) -> Result<f64, EvalError>| -> Result<Vec<ThresholdValue>, EvalError> {
            ts.iter()
                .map(|&t| Ok(ThresholdValue { threshold: t, value: f(&errors, t)? }))
                .collect()
        };
        let max = ts.last().copied().unwrap_or(curve_step);
        let curve = success_curve(&errors, curve_step, max, &ts)?
            .into_iter()
            .map(|(threshold, success_rate)| CurvePoint { threshold, success_rate })
            .collect();
        let rtre = if kind == ErrorKind::Rtre {
            let per_pair: Vec<Option<(f64, f64)>> = samples.iter().map(|s| s.rtre.map(|r| (r[0], r[1]))).collect();
            Some(aggregate_rtre(&per_pair)?)
        } else {
            None
        };
        Ok(Self {
            schema: SCHEMA_VERSION.into(),
            protocol: protocol.into(),
            error_kind: kind,
            pairs: samples.len(),
            failed: samples.iter().filter(|s| s.is_failed()).count(),
            success_rate: at(success_rate)?,
            auc: at(auc)?,
            rtre,
            curve,
            samples,
            config,
            provenance: None,
        })
    }

    pub fn success_rate_at(&self, threshold: f64) -> Option<f64> {
        self.success_rate.iter().find(|v| v.threshold == threshold).map(|v| v.value)
    }

    pub fn auc_at(&self, threshold: f64) -> Option<f64> {
        self.auc.iter().find(|v| v.threshold == threshold).map(|v| v.value)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn curve_csv(&self) -> String {
        let mut s = String::from("threshold,success_rate\n");
        for p in &self.curve {
            s.push_str(&format!("{},{}\n", p.threshold, p.success_rate));
        }
        s
    }
}

/// Writes the JSON report and the success-curve CSV.
pub fn emit_report(report: &MetricReport, json_path: &Path, csv_path: &Path) -> Result<(), EvalError> {
    for (path, body) in [(json_path, report.to_json()), (csv_path, report.curve_csv())] {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| IoError::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, e: Option<f64>) -> ErrorSample {
        ErrorSample {
            error: e,
            failure: None,
            ..ErrorSample::failed(id, ErrorKind::WarpPx, "")
        }
    }

    #[test]
    fn csv_holds_threshold_values() {
        let errs = [1.0, 6.0, 6.0, 12.0, 12.0, 12.0, 12.0, 12.0, 12.0, 25.0];
        let samples: Vec<_> = errs.iter().enumerate().map(|(i, &e)| sample(&i.to_string(), Some(e))).collect();
        let r = MetricReport::build("warp_homography", ErrorKind::WarpPx, samples, &[5.0, 10.0, 20.0], 1.0, serde_json::json!({})).unwrap();
        assert_eq!(r.success_rate_at(5.0), Some(0.1));
        assert_eq!(r.success_rate_at(10.0), Some(0.3));
        assert_eq!(r.success_rate_at(20.0), Some(0.9));
        let csv = r.curve_csv();
        assert!(csv.starts_with("threshold,success_rate\n1,0\n"));
        assert!(csv.contains("\n5,0.1\n") && csv.contains("\n10,0.3\n") && csv.contains("\n20,0.9\n"));
        assert_eq!(csv.lines().count(), 21);
    }

    #[test]
    fn emission_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let r = MetricReport::build("x", ErrorKind::PoseDeg, vec![sample("a", Some(0.3)), sample("b", None)], &[5.0], 0.5, serde_json::json!({"seed": 1})).unwrap();
        let (j, c) = (dir.path().join("r.json"), dir.path().join("r.csv"));
        emit_report(&r, &j, &c).unwrap();
        let first = (std::fs::read(&j).unwrap(), std::fs::read(&c).unwrap());
        emit_report(&r, &j, &c).unwrap();
        assert_eq!(first, (std::fs::read(&j).unwrap(), std::fs::read(&c).unwrap()));
        let back: MetricReport = serde_json::from_slice(&first.0).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.schema, "xmr-1");
        assert_eq!(r.failed, 1);
        assert_eq!(r.curve.len(), 10);
    }

    #[test]
    fn empty_rejected() {
        assert!(MetricReport::build("x", ErrorKind::WarpPx, vec![], &[1.0], 1.0, serde_json::json!({})).is_err());
    }
}

//! (Lg, Wfin) sweeps and metric correlations.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::grid::DesignPoint;

use super::{measure_all, ClampConfig, ClampError, ClampModels, Metric, MetricsReport};

/// A requested point that was not simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSkip {
    pub point: DesignPoint,
    pub reason: String,
}

/// Lowest value of one metric over the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BestPoint {
    pub metric: Metric,
    pub point: DesignPoint,
    pub value: f64,
    /// (POR - best) / POR.
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Lg-major, in request order.
    pub reports: Vec<MetricsReport>,
    pub skipped: Vec<SweepSkip>,
    pub por: MetricsReport,
    /// Empty when every point was skipped.
    pub best: Vec<BestPoint>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "lg_nm,wfin_nm,clamp_v,leak_a,peak_a,recovery_s";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.reports {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e}",
                r.point.axis1,
                r.point.axis2,
                r.clamp_voltage,
                r.leakage,
                r.peak_powerup_current,
                r.recovery_time
            );
        }
        out
    }

    /// Per-metric best point and improvement over POR.
    pub fn best_csv(&self) -> String {
        let mut out = String::from("metric,lg_nm,wfin_nm,best,por,improvement\n");
        for b in &self.best {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{:e}",
                b.metric.column(),
                b.point.axis1,
                b.point.axis2,
                b.value,
                b.metric.of(&self.por),
                b.improvement
            );
        }
        out
    }

    pub fn best(&self, metric: Metric) -> Option<&BestPoint> {
        self.best.iter().find(|b| b.metric == metric)
    }
}

/// Measures every (lg, wfin) pair. Points outside the model hull are skipped
/// and listed; solver failures abort the sweep.
pub fn run_sweep(
    cfg: &ClampConfig,
    models: &ClampModels,
    lg: &[f64],
    wfin: &[f64],
) -> Result<SweepResult, ClampError> {
    cfg.validate()?;
    models.check(&cfg.por)?;
    let points: Vec<DesignPoint> = lg
        .iter()
        .flat_map(|&a| wfin.iter().map(move |&b| DesignPoint::new(a, b)))
        .collect();
    let mut skipped = Vec::new();
    let mut inside = Vec::new();
    for p in points {
        if let Err(e) = p.validate() {
            skipped.push(SweepSkip {
                point: p,
                reason: e.to_string(),
            });
        } else if !models.contains(&p) {
            skipped.push(SweepSkip {
                point: p,
                reason: ClampError::OutOfHull {
                    lg: p.axis1,
                    wfin: p.axis2,
                }
                .to_string(),
            });
        } else {
            inside.push(p);
        }
    }
    let reports: Vec<MetricsReport> = inside
        .par_iter()
        .map(|p| measure_all(&cfg.with_point(*p), models))
        .collect::<Result<_, _>>()?;
    let por = match reports.iter().find(|r| r.point == cfg.por) {
        Some(r) => r.clone(),
        None => measure_all(&cfg.with_point(cfg.por), models)?,
    };
    let mut best = Vec::new();
    if !reports.is_empty() {
        for m in Metric::ALL {
            let b = reports
                .iter()
                .min_by(|x, y| m.of(x).total_cmp(&m.of(y)))
                .expect("non-empty");
            let (value, base) = (m.of(b), m.of(&por));
            best.push(BestPoint {
                metric: m,
                point: b.point,
                value,
                improvement: (base - value) / base,
            });
        }
    }
    Ok(SweepResult {
        reports,
        skipped,
        por,
        best,
    })
}

/// Pearson r of two equal-length samples; None when either has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "samples differ in length");
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Spread at rounding level counts as none.
    let flat = |s: f64, m: f64| s <= (1e-12 * m.abs()).powi(2) * n;
    if flat(sxx, mx) || flat(syy, my) || sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson matrix of the given columns. Undefined entries (zero variance) are None.
pub fn pearson_matrix(columns: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    let k = columns.len();
    let mut m = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = pearson(&columns[i], &columns[j]).map(|r| if i == j { 1.0 } else { r });
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    m
}

/// 4x4 Pearson matrix over sweep reports, rows and columns in [`Metric::ALL`] order.
pub fn correlation_matrix(reports: &[MetricsReport]) -> Result<[[Option<f64>; 4]; 4], ClampError> {
    if reports.len() < 3 {
        return Err(ClampError::TooFewPoints(reports.len()));
    }
    let cols: Vec<Vec<f64>> = Metric::ALL
        .iter()
        .map(|m| reports.iter().map(|r| m.of(r)).collect())
        .collect();
    let full = pearson_matrix(&cols);
    let mut out = [[None; 4]; 4];
    for (i, row) in full.iter().enumerate() {
        out[i].copy_from_slice(row);
    }
    Ok(out)
}

pub fn correlation_csv(matrix: &[[Option<f64>; 4]; 4]) -> String {
    let mut out = String::from("metric");
    for m in Metric::ALL {
        out.push(',');
        out.push_str(m.column());
    }
    out.push('\n');
    for (i, m) in Metric::ALL.iter().enumerate() {
        out.push_str(m.column());
        for v in &matrix[i] {
            match v {
                Some(r) => {
                    let _ = write!(out, ",{r:.6}");
                }
                None => out.push_str(",undefined"),
            }
        }
        out.push('\n');
    }
    out
}

//! Monte Carlo over Gaussian Lg and Wfin fluctuations around POR.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::grid::DesignPoint;

use super::{measure_all, ClampConfig, ClampError, ClampModels, Metric, MetricsReport};

#[derive(Debug, Clone, PartialEq)]
pub struct McSample {
    pub index: usize,
    /// Point as drawn, before clipping.
    pub drawn: DesignPoint,
    pub clipped: bool,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSummary {
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single sample.
    pub std_dev: f64,
    /// g1 = m3 / m2^1.5; None when the samples have no spread.
    pub skewness: Option<f64>,
}

impl McSummary {
    pub fn from_values(metric: Metric, v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let (mut m2, mut m3) = (0.0, 0.0);
        for x in v {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
        }
        let std_dev = if v.len() > 1 {
            (m2 / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        m2 /= n;
        m3 /= n;
        // Spread at rounding level is treated as none.
        let skewness = if m2.sqrt() > 1e-12 * mean.abs() && m2 > 0.0 {
            Some(m3 / m2.powf(1.5))
        } else {
            None
        };
        Self {
            metric,
            mean,
            std_dev,
            skewness,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub samples: Vec<McSample>,
    /// In [`Metric::ALL`] order.
    pub summary: [McSummary; 4],
    pub seed: u64,
    pub sigma_lg: f64,
    pub sigma_wfin: f64,
    pub clip_count: usize,
    pub config_digest: String,
}

impl McResult {
    pub const CSV_HEADER: &'static str =
        "sample,lg_drawn_nm,wfin_drawn_nm,clipped,lg_nm,wfin_nm,clamp_v,leak_a,peak_a,recovery_s,recovery_resolved";

    pub fn summary_for(&self, metric: Metric) -> &McSummary {
        self.summary
            .iter()
            .find(|s| s.metric == metric)
            .expect("every metric summarized")
    }

    /// Per-sample rows, then a summary block introduced by a `#` line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for s in &self.samples {
            let r = &s.report;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{}",
                s.index,
                s.drawn.axis1,
                s.drawn.axis2,
                s.clipped,
                r.point.axis1,
                r.point.axis2,
                r.clamp_voltage,
                r.leakage,
                r.peak_powerup_current,
                r.recovery_time,
                r.recovery_resolved
            );
        }
        let _ = writeln!(
            out,
            "# summary n={} seed={} sigma_lg_nm={} sigma_wfin_nm={} clipped={} config_digest={}",
            self.samples.len(),
            self.seed,
            self.sigma_lg,
            self.sigma_wfin,
            self.clip_count,
            self.config_digest
        );
        out.push_str("metric,mean,std_dev,skewness\n");
        for s in &self.summary {
            let skew = s
                .skewness
                .map_or_else(|| "undefined".to_string(), |g| format!("{g:e}"));
            let _ = writeln!(
                out,
                "{},{:e},{:e},{}",
                s.metric.column(),
                s.mean,
                s.std_dev,
                skew
            );
        }
        out
    }
}

/// Draw for sample `index`: its own ChaCha stream of the master seed, so the
/// draw never depends on scheduling.
pub fn draw_point(
    center: DesignPoint,
    sigma_lg: f64,
    sigma_wfin: f64,
    seed: u64,
    index: usize,
) -> DesignPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let z1: f64 = StandardNormal.sample(&mut rng);
    let z2: f64 = StandardNormal.sample(&mut rng);
    DesignPoint::new(center.axis1 + sigma_lg * z1, center.axis2 + sigma_wfin * z2)
}

/// `n` samples centered at `cfg.por` with standard deviations `sigma_lg` and
/// `sigma_wfin`, nm. Draws outside the model hull are clipped onto it and counted.
pub fn monte_carlo(
    cfg: &ClampConfig,
    models: &ClampModels,
    n: usize,
    sigma_lg: f64,
    sigma_wfin: f64,
    seed: u64,
) -> Result<McResult, ClampError> {
    if n == 0 {
        return Err(ClampError::NoSamples);
    }
    if !(sigma_lg.is_finite() && sigma_lg >= 0.0 && sigma_wfin.is_finite() && sigma_wfin >= 0.0) {
        return Err(ClampError::Config(
            "sigma_lg and sigma_wfin must be non-negative".into(),
        ));
    }
    cfg.validate()?;
    models.check(&cfg.por)?;
    let samples: Vec<McSample> = (0..n)
        .into_par_iter()
        .map(|index| {
            let drawn = draw_point(cfg.por, sigma_lg, sigma_wfin, seed, index);
            let (point, clipped) = models.clip(drawn);
            let report = measure_all(&cfg.with_point(point), models)?;
            Ok(McSample {
                index,
                drawn,
                clipped,
                report,
            })
        })
        .collect::<Result<_, ClampError>>()?;
    let summary = Metric::ALL.map(|m| {
        let v: Vec<f64> = samples.iter().map(|s| m.of(&s.report)).collect();
        McSummary::from_values(m, &v)
    });
    let clip_count = samples.iter().filter(|s| s.clipped).count();
    Ok(McResult {
        samples,
        summary,
        seed,
        sigma_lg,
        sigma_wfin,
        clip_count,
        config_digest: cfg.digest(),
    })
}

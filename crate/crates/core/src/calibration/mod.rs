//! Reference data, fit metrics and card extraction.
//!
//! Reference I-V data come either from the analytic oracle in [`oracle`] or
//! from user CSV files (`vg,vd,id` and `vg,cgg`). [`extract_card`] fits the
//! free parameters of a [`ModelCard`] by minimizing `rms_lin + 0.5 rms_log`
//! with a restarted Nelder-Mead search; [`calibrate_grid`] repeats that at
//! every lattice node.

mod csv_io;
mod extract;
mod oracle;
mod simplex;

pub use csv_io::{read_cgg_csv, read_iv_csv, write_cgg_csv, write_fit_csv, write_iv_csv};
pub use extract::{
    calibrate_grid, extract_card, FitConfig, FitResult, FreeParam, GridCalibration, NodeReference,
};
pub use oracle::{virtual_tcad, OracleParams, ORACLE_KEYS};
pub use simplex::{minimize, SimplexOptions, SimplexResult};

use thiserror::Error;

use crate::device::{DeviceError, Polarity};
use crate::grid::{DesignPoint, GridError};
use crate::keyvalue::KeyValueError;

/// Reference currents at or below this magnitude are left out of the log metric.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("simulated and reference data differ in length ({sim} vs {reference})")]
    LengthMismatch { sim: usize, reference: usize },
    #[error("design point ({lg}, {wfin}) nm is outside the oracle validity box")]
    OutsideValidity { lg: f64, wfin: f64 },
    #[error("oracle config: {0}")]
    Config(String),
    #[error(transparent)]
    KeyValue(#[from] KeyValueError),
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvRow {
    pub vg: f64,
    pub vd: f64,
    pub id: f64,
}

/// I-V reference data with source and bulk grounded.
#[derive(Debug, Clone, PartialEq)]
pub struct IvDataset {
    pub point: DesignPoint,
    pub vdd: f64,
    pub polarity: Polarity,
    pub rows: Vec<IvRow>,
}

impl IvDataset {
    /// Distinct drain biases, in first-seen order.
    pub fn vd_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.vd) {
                out.push(r.vd);
            }
        }
        out
    }

    /// Non-empty, finite, at least two drain biases, same gate sweep on every curve.
    pub fn validate(&self) -> Result<(), CalibError> {
        if self.rows.is_empty() {
            return Err(CalibError::EmptyDataset);
        }
        if self
            .rows
            .iter()
            .any(|r| !(r.vg.is_finite() && r.vd.is_finite() && r.id.is_finite()))
        {
            return Err(CalibError::InvalidDataset("non-finite entry".into()));
        }
        let vds = self.vd_values();
        if vds.len() < 2 {
            return Err(CalibError::InvalidDataset(
                "need at least two distinct vd values".into(),
            ));
        }
        let gate_set = |vd: f64| {
            let mut g: Vec<f64> = self
                .rows
                .iter()
                .filter(|r| r.vd == vd)
                .map(|r| r.vg)
                .collect();
            g.sort_by(f64::total_cmp);
            g
        };
        let first = gate_set(vds[0]);
        if vds.iter().any(|&vd| gate_set(vd) != first) {
            return Err(CalibError::InvalidDataset(
                "bias grid is not rectangular".into(),
            ));
        }
        Ok(())
    }

    /// Scales every current by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| IvRow { id: r.id * k, ..*r })
            .collect();
        Self {
            rows,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CggRow {
    pub vg: f64,
    pub cgg: f64,
}

/// Gate capacitance per fin against gate voltage at Vd = Vs = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CggDataset {
    pub point: DesignPoint,
    pub polarity: Polarity,
    pub rows: Vec<CggRow>,
}

/// Bias grid for generated reference data. Magnitudes; P data are mirrored.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasSpec {
    pub vdd: f64,
    pub vg_step: f64,
    pub vd_values: Vec<f64>,
}

impl Default for BiasSpec {
    fn default() -> Self {
        Self {
            vdd: 0.75,
            vg_step: 0.025,
            vd_values: vec![0.05, 0.4, 0.75],
        }
    }
}

impl BiasSpec {
    pub fn validate(&self) -> Result<(), CalibError> {
        if !(self.vdd > 0.0 && self.vg_step > 0.0 && self.vg_step <= self.vdd) {
            return Err(CalibError::InvalidDataset(
                "vdd and vg_step must be positive".into(),
            ));
        }
        if self.vd_values.len() < 2 {
            return Err(CalibError::InvalidDataset(
                "need at least two distinct vd values".into(),
            ));
        }
        Ok(())
    }

    /// 0 ..= vdd in `vg_step` increments.
    pub fn vg_values(&self) -> Vec<f64> {
        let n = (self.vdd / self.vg_step).round() as usize;
        (0..=n)
            .map(|i| (i as f64 * self.vg_step).min(self.vdd))
            .collect()
    }

    /// -vdd ..= vdd in `vg_step` increments.
    pub fn cgg_vg_values(&self) -> Vec<f64> {
        let n = (self.vdd / self.vg_step).round() as i64;
        (-n..=n)
            .map(|i| (i as f64 * self.vg_step).clamp(-self.vdd, self.vdd))
            .collect()
    }
}

/// Fit errors in percent: `lin` is normalized per drain-bias curve, `log`
/// is the RMS of log10 ratios expressed in percent of a decade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPair {
    pub lin: f64,
    pub log: f64,
}

/// Compares simulated currents (same order as `dataset.rows`) against the reference.
pub fn relative_rms(sim: &[f64], dataset: &IvDataset) -> Result<RmsPair, CalibError> {
    if dataset.rows.is_empty() {
        return Err(CalibError::EmptyDataset);
    }
    if sim.len() != dataset.rows.len() {
        return Err(CalibError::LengthMismatch {
            sim: sim.len(),
            reference: dataset.rows.len(),
        });
    }
    let vds = dataset.vd_values();
    let curve_max: Vec<f64> = vds
        .iter()
        .map(|&vd| {
            dataset
                .rows
                .iter()
                .filter(|r| r.vd == vd)
                .map(|r| r.id.abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut lin = 0.0;
    let (mut log, mut nlog) = (0.0, 0usize);
    for (s, r) in sim.iter().zip(&dataset.rows) {
        let imax = curve_max[vds.iter().position(|&v| v == r.vd).unwrap_or(0)];
        if imax > 0.0 {
            lin += ((s - r.id) / imax).powi(2);
        }
        if r.id.abs() > LOG_FLOOR {
            let ratio = (s / r.id).abs().max(f64::MIN_POSITIVE);
            log += ratio.log10().powi(2);
            nlog += 1;
        }
    }
    let lin = (lin / dataset.rows.len() as f64).sqrt() * 100.0;
    let log = if nlog == 0 {
        0.0
    } else {
        (log / nlog as f64).sqrt() * 100.0
    };
    Ok(RmsPair { lin, log })
}

#[cfg(test)]
mod tests;

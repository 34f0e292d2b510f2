//! Cross-cell continuity diagnostic.
//!
//! Inverse-distance weights are computed from the enclosing cell only, so the
//! blended model jumps when a query crosses a shared cell edge. This module
//! measures how large that jump is.

use std::sync::Arc;

use super::{locate_and_weigh, DesignPoint, GridError, ModelGrid};
use crate::device::BiasPoint;

/// Positions along an edge at which both sides are compared, as fractions of the segment.
const PROBE_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

/// Denominator floor for relative jumps, amperes.
const CURRENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SeamEdge {
    /// 1 if the edge is a line of constant axis1, 2 for constant axis2.
    pub axis: u8,
    /// Index of the grid line the edge lies on.
    pub line: usize,
    /// Index of the cell segment along the other axis.
    pub segment: usize,
    /// Coordinate of the grid line, nm.
    pub position: f64,
    /// Largest |dId| / max(|Id|, 1 pA) over the probes and bias set.
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeamReport {
    pub edges: Vec<SeamEdge>,
}

impl SeamReport {
    pub const CSV_HEADER: &'static str = "axis,line,segment,position_nm,max_gap";

    pub fn max_gap(&self) -> f64 {
        self.edges.iter().map(|e| e.max_gap).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for e in &self.edges {
            out.push_str(&format!(
                "{},{},{},{},{:e}\n",
                e.axis, e.line, e.segment, e.position, e.max_gap
            ));
        }
        out
    }
}

fn relative_jump(
    grid: &Arc<ModelGrid>,
    a: DesignPoint,
    b: DesignPoint,
    bias_set: &[BiasPoint],
) -> Result<f64, GridError> {
    let ga = locate_and_weigh(grid, a)?;
    let gb = locate_and_weigh(grid, b)?;
    let mut worst: f64 = 0.0;
    for bias in bias_set {
        let ia = ga.ensemble_eval(bias, 1)?.currents.id;
        let ib = gb.ensemble_eval(bias, 1)?.currents.id;
        let denom = ia.abs().max(ib.abs()).max(CURRENT_FLOOR);
        worst = worst.max((ia - ib).abs() / denom);
    }
    Ok(worst)
}

/// Probes every interior cell edge just either side of the shared line.
pub fn seam_gap(grid: &Arc<ModelGrid>, bias_set: &[BiasPoint]) -> Result<SeamReport, GridError> {
    let (a1, a2) = (grid.axis1(), grid.axis2());
    let mut edges = Vec::new();
    for (axis, lines, across) in [(1u8, a1, a2), (2u8, a2, a1)] {
        for k in 1..lines.len().saturating_sub(1) {
            let spacing = (lines[k] - lines[k - 1]).min(lines[k + 1] - lines[k]);
            let eps = 0.5 * spacing * 1e-6;
            for seg in 0..across.len() - 1 {
                let mut worst: f64 = 0.0;
                for f in PROBE_FRACTIONS {
                    let t = across[seg] + f * (across[seg + 1] - across[seg]);
                    let (lo, hi) = if axis == 1 {
                        (
                            DesignPoint::new(lines[k] - eps, t),
                            DesignPoint::new(lines[k] + eps, t),
                        )
                    } else {
                        (
                            DesignPoint::new(t, lines[k] - eps),
                            DesignPoint::new(t, lines[k] + eps),
                        )
                    };
                    worst = worst.max(relative_jump(grid, lo, hi, bias_set)?);
                }
                edges.push(SeamEdge {
                    axis,
                    line: k,
                    segment: seg,
                    position: lines[k],
                    max_gap: worst,
                });
            }
        }
    }
    Ok(SeamReport { edges })
}

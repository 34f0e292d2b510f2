//! The general compact model.
//!
//! A [`ModelGrid`] holds one calibrated card per node of a rectangular
//! lattice over two design axes (gate length and fin width by default). A
//! query point inside the lattice hull is served by the four corners of its
//! enclosing cell, blended with normalized inverse Euclidean distances:
//!
//! ```text
//! dis(a, A_j) = sqrt((a1 - A_j1)^2 + (a2 - A_j2)^2)
//! w_i         = (1 / dis(a, A_i)) / sum_j (1 / dis(a, A_j))
//! f(D,G,S,B)  = sum_i w_i f_i(D,G,S,B)
//! ```
//!
//! Axis names are metadata only; the weighting never looks at them.

mod manifest;
mod seam;

pub use manifest::{read_grid, write_grid, ManifestError};
pub use seam::{seam_gap, SeamEdge, SeamReport};

use std::sync::Arc;

use thiserror::Error;

use crate::device::{
    BiasPoint, DeviceError, DeviceOutput, Geometry, ModelCard, Polarity, TerminalCharges,
    TerminalCurrents, TerminalModel,
};

/// Below this distance (nm) a query is treated as sitting on the node.
pub const NODE_EPSILON_NM: f64 = 1e-9;

/// Tolerance for matching a card's geometry to its lattice coordinates.
const COORD_TOLERANCE_NM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("axis {axis} needs at least two values")]
    TooFewValues { axis: String },
    #[error("axis {axis} values must be finite, positive and strictly ascending")]
    NotAscending { axis: String },
    #[error("expected {expected} cards, got {got}")]
    CardCount { expected: usize, got: usize },
    #[error("card at node ({i1}, {i2}) has geometry ({lg}, {wfin}) but sits at ({a1}, {a2})")]
    CardMismatch {
        i1: usize,
        i2: usize,
        lg: f64,
        wfin: f64,
        a1: f64,
        a2: f64,
    },
    #[error("all cards in a grid must share one polarity")]
    MixedPolarity,
    #[error("{axis} = {value} nm is outside the grid range [{min}, {max}] nm")]
    OutOfRange {
        axis: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("design point coordinates must be finite and positive, got ({0}, {1})")]
    InvalidPoint(f64, f64),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// A position in the two-axis design space, nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub axis1: f64,
    pub axis2: f64,
}

impl DesignPoint {
    pub fn new(axis1: f64, axis2: f64) -> Self {
        Self { axis1, axis2 }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.axis1.is_finite() && self.axis2.is_finite() && self.axis1 > 0.0 && self.axis2 > 0.0
        {
            Ok(())
        } else {
            Err(GridError::InvalidPoint(self.axis1, self.axis2))
        }
    }

    /// Euclidean distance in nm.
    pub fn distance(&self, other: &DesignPoint) -> f64 {
        (self.axis1 - other.axis1).hypot(self.axis2 - other.axis2)
    }
}

/// Lattice of calibrated cards. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrid {
    labels: [String; 2],
    axis1: Vec<f64>,
    axis2: Vec<f64>,
    /// Row-major: `axis1` index outer, `axis2` index inner.
    cards: Vec<ModelCard>,
}

fn check_axis(label: &str, values: &[f64]) -> Result<(), GridError> {
    if values.len() < 2 {
        return Err(GridError::TooFewValues {
            axis: label.to_string(),
        });
    }
    let ok =
        values.iter().all(|v| v.is_finite() && *v > 0.0) && values.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(GridError::NotAscending {
            axis: label.to_string(),
        })
    }
}

impl ModelGrid {
    /// Builds a grid. Each card's `(lg, wfin)` must equal its node coordinates.
    pub fn new(
        labels: [&str; 2],
        axis1: Vec<f64>,
        axis2: Vec<f64>,
        cards: Vec<ModelCard>,
    ) -> Result<Self, GridError> {
        check_axis(labels[0], &axis1)?;
        check_axis(labels[1], &axis2)?;
        let expected = axis1.len() * axis2.len();
        if cards.len() != expected {
            return Err(GridError::CardCount {
                expected,
                got: cards.len(),
            });
        }
        let polarity = cards[0].polarity;
        for (idx, card) in cards.iter().enumerate() {
            card.validate()?;
            if card.polarity != polarity {
                return Err(GridError::MixedPolarity);
            }
            let (i1, i2) = (idx / axis2.len(), idx % axis2.len());
            let (a1, a2) = (axis1[i1], axis2[i2]);
            if (card.lg - a1).abs() > COORD_TOLERANCE_NM
                || (card.wfin - a2).abs() > COORD_TOLERANCE_NM
            {
                return Err(GridError::CardMismatch {
                    i1,
                    i2,
                    lg: card.lg,
                    wfin: card.wfin,
                    a1,
                    a2,
                });
            }
        }
        Ok(Self {
            labels: [labels[0].to_string(), labels[1].to_string()],
            axis1,
            axis2,
            cards,
        })
    }

    pub fn labels(&self) -> [&str; 2] {
        [&self.labels[0], &self.labels[1]]
    }

    pub fn axis1(&self) -> &[f64] {
        &self.axis1
    }

    pub fn axis2(&self) -> &[f64] {
        &self.axis2
    }

    pub fn cards(&self) -> &[ModelCard] {
        &self.cards
    }

    pub fn polarity(&self) -> Polarity {
        self.cards[0].polarity
    }

    pub fn node_count(&self) -> usize {
        self.cards.len()
    }

    pub fn node_index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.axis2.len() + i2
    }

    pub fn node_point(&self, index: usize) -> DesignPoint {
        DesignPoint::new(
            self.axis1[index / self.axis2.len()],
            self.axis2[index % self.axis2.len()],
        )
    }

    pub fn card(&self, index: usize) -> &ModelCard {
        &self.cards[index]
    }

    pub fn contains(&self, p: &DesignPoint) -> bool {
        self.check_hull(p).is_ok()
    }

    fn check_hull(&self, p: &DesignPoint) -> Result<(), GridError> {
        p.validate()?;
        for (label, axis, value) in [
            (&self.labels[0], &self.axis1, p.axis1),
            (&self.labels[1], &self.axis2, p.axis2),
        ] {
            let (min, max) = (axis[0], axis[axis.len() - 1]);
            if value < min || value > max {
                return Err(GridError::OutOfRange {
                    axis: label.clone(),
                    value,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }

    /// Clamps a point into the hull, reporting whether it moved.
    pub fn clip(&self, p: DesignPoint) -> (DesignPoint, bool) {
        let c = DesignPoint::new(
            p.axis1
                .clamp(self.axis1[0], self.axis1[self.axis1.len() - 1]),
            p.axis2
                .clamp(self.axis2[0], self.axis2[self.axis2.len() - 1]),
        );
        (c, c != p)
    }

    /// Index of the lower cell boundary; queries on a shared edge go to the lower cell.
    fn cell_index(axis: &[f64], value: f64) -> usize {
        let k = axis.partition_point(|a| *a < value);
        k.saturating_sub(1).min(axis.len() - 2)
    }

    /// Corners of the enclosing cell, ordered (lo,lo), (lo,hi), (hi,hi), (hi,lo).
    pub fn cell_corners(&self, p: &DesignPoint) -> Result<[usize; 4], GridError> {
        self.check_hull(p)?;
        let i = Self::cell_index(&self.axis1, p.axis1);
        let j = Self::cell_index(&self.axis2, p.axis2);
        Ok([
            self.node_index(i, j),
            self.node_index(i, j + 1),
            self.node_index(i + 1, j + 1),
            self.node_index(i + 1, j),
        ])
    }
}

/// Four (node index, weight) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    pub entries: [(usize, f64); 4],
}

impl WeightVector {
    pub fn weights(&self) -> [f64; 4] {
        self.entries.map(|(_, w)| w)
    }

    pub fn nodes(&self) -> [usize; 4] {
        self.entries.map(|(n, _)| n)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    /// Entries ordered by node index; fixes the summation order.
    pub fn sorted(&self) -> [(usize, f64); 4] {
        let mut e = self.entries;
        e.sort_by_key(|(n, _)| *n);
        e
    }
}

/// Normalized inverse-distance weights for a query and four lattice positions.
pub fn inverse_distance_weights(query: &DesignPoint, corners: &[DesignPoint; 4]) -> [f64; 4] {
    let d = corners.map(|c| query.distance(&c));
    if let Some(hit) = d.iter().position(|&x| x < NODE_EPSILON_NM) {
        let mut w = [0.0; 4];
        w[hit] = 1.0;
        return w;
    }
    let inv = d.map(|x| 1.0 / x);
    let total: f64 = inv.iter().sum();
    inv.map(|x| x / total)
}

/// A query point bound to its four weighted lattice cards.
#[derive(Debug, Clone)]
pub struct GeneralModel {
    grid: Arc<ModelGrid>,
    query: DesignPoint,
    weights: WeightVector,
}

/// Locates the enclosing cell of `query` and computes the corner weights.
pub fn locate_and_weigh(
    grid: &Arc<ModelGrid>,
    query: DesignPoint,
) -> Result<GeneralModel, GridError> {
    let nodes = grid.cell_corners(&query)?;
    let corners = nodes.map(|n| grid.node_point(n));
    let w = inverse_distance_weights(&query, &corners);
    let entries = [
        (nodes[0], w[0]),
        (nodes[1], w[1]),
        (nodes[2], w[2]),
        (nodes[3], w[3]),
    ];
    Ok(GeneralModel {
        grid: Arc::clone(grid),
        query,
        weights: WeightVector { entries },
    })
}

impl GeneralModel {
    /// Binds arbitrary weights, e.g. to evaluate a fixed blend. Weights must be
    /// non-negative and sum to one.
    pub fn with_weights(grid: Arc<ModelGrid>, query: DesignPoint, weights: WeightVector) -> Self {
        Self {
            grid,
            query,
            weights,
        }
    }

    pub fn query(&self) -> DesignPoint {
        self.query
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn grid(&self) -> &Arc<ModelGrid> {
        &self.grid
    }

    /// Weighted sum of the corner cards' currents and charges.
    pub fn ensemble_eval(&self, bias: &BiasPoint, nfin: u32) -> Result<DeviceOutput, DeviceError> {
        let mut cur = [0.0; 4];
        let mut chg = [0.0; 4];
        for (node, w) in self.weights.sorted() {
            if w == 0.0 {
                continue;
            }
            let out = self.grid.card(node).evaluate(bias, nfin)?;
            for (acc, v) in cur.iter_mut().zip(out.currents.as_array()) {
                *acc += w * v;
            }
            for (acc, v) in chg.iter_mut().zip(out.charges.as_array()) {
                *acc += w * v;
            }
        }
        Ok(DeviceOutput {
            currents: TerminalCurrents {
                id: cur[0],
                ig: cur[1],
                is: cur[2],
                ib: cur[3],
            },
            charges: TerminalCharges {
                qd: chg[0],
                qg: chg[1],
                qs: chg[2],
                qb: chg[3],
            },
        })
    }
}

impl TerminalModel for GeneralModel {
    fn polarity(&self) -> Polarity {
        self.grid.polarity()
    }

    fn geometry(&self) -> Geometry {
        let hfin: f64 = self
            .weights
            .sorted()
            .iter()
            .map(|(n, w)| w * self.grid.card(*n).hfin)
            .sum();
        Geometry {
            lg_nm: self.query.axis1,
            weff_nm: 2.0 * hfin + self.query.axis2,
        }
    }

    fn evaluate(&self, bias: &BiasPoint, nfin: u32) -> Result<DeviceOutput, DeviceError> {
        self.ensemble_eval(bias, nfin)
    }
}

#[cfg(test)]
mod tests;

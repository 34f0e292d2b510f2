//! RC-triggered ESD power clamp: netlist builder, metric extraction,
//! design-space sweeps, metric correlations and Monte Carlo variation.

mod config;
mod mc;
mod measure;
mod models;
mod netlist;
mod sweep;


pub use config::{ClampConfig, EsdEvent, CONFIG_KEYS};
pub use mc::{draw_point, monte_carlo, McResult, McSample, McSummary};
pub use measure::{measure, measure_all, Metric, MetricsReport};
pub use models::{ClampModels, N_MODEL, P_MODEL};
pub use netlist::{
    build_clamp_netlist, event_window, false_trigger_edge_end, BIGFET, GATE, SUPPLY, TRIG, VDD,
};
pub use sweep::{
    correlation_csv, correlation_matrix, pearson, pearson_matrix, run_sweep, BestPoint,
    SweepResult, SweepSkip,
};

use crate::calibration::CalibError;
use crate::keyvalue::KeyValueError;
use crate::sim::{NetlistError, SimError};

#[derive(Debug, thiserror::Error)]
pub enum ClampError {
    #[error("stage count must be odd, got {0}")]
    EvenStages(u32),
    #[error("invalid clamp config: {0}")]
    Config(String),
    #[error(transparent)]
    KeyValue(#[from] KeyValueError),
    #[error("design point ({lg} nm, {wfin} nm) is outside the model grid")]
    OutOfHull { lg: f64, wfin: f64 },
    #[error("{event}: {source}")]
    Sim {
        event: &'static str,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Calibration(#[from] CalibError),
    #[error("monte carlo needs at least one sample")]
    NoSamples,
    #[error("correlation needs at least 3 sweep points, got {0}")]
    TooFewPoints(usize),
}

impl ClampError {
    /// True when the failure came from the solver rather than from the inputs.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, ClampError::Sim { source, .. } if source.is_solver_failure())
    }
}

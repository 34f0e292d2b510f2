//! General compact model toolkit.
//!
//! A lattice of calibrated surrogate FinFET cards is blended by normalized
//! inverse-distance weights into a model valid anywhere inside the lattice
//! hull. The crate also carries what is needed to use that model at the
//! circuit level: a small modified-nodal-analysis simulator, an RC-triggered
//! ESD power clamp benchmark, design-space sweeps and Monte Carlo variation.
//!
//! Module map:
//!
//! - [`device`]: surrogate compact model, model-card files, characterization.
//! - [`grid`]: lattice of cards, four-corner weighting, ensemble evaluation.
//! - [`calibration`]: analytic reference-data oracle, RMS metrics, card extraction.
//! - [`sim`]: netlists, DC operating point, adaptive transient analysis.
//! - [`clamp`]: clamp netlist builder, ESD metrics, sweeps, statistics, Monte Carlo.

pub mod calibration;
pub mod clamp;
pub mod device;
pub mod digest;
pub mod grid;
pub mod keyvalue;
pub mod sim;
pub mod units;

pub use device::{BiasPoint, ModelCard, Polarity, TerminalModel};
pub use grid::{DesignPoint, GeneralModel, ModelGrid};

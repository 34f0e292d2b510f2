//! Small circuit simulator: dense MNA, DC operating point with homotopy
//! fallbacks, and adaptive trapezoidal transient analysis with charge-based
//! companion models.
//!
//! Transistors are evaluated through [`crate::device::TerminalModel`], so a
//! single card and the lattice ensemble plug in the same way. The Jacobian is
//! built by forward differences on each transistor terminal.

mod circuit;
mod library;
mod netlist;
mod stimulus;
mod transient;

pub use circuit::{Circuit, DcMethod, DcSolution};
pub use library::ModelLibrary;
pub use netlist::{
    parse_netlist, Analysis, Element, ElementKind, Netlist, NetlistError, ParseError, GROUND,
};
pub use stimulus::{Stimulus, StimulusError};
pub use transient::{SolverStats, TransientResult};

use thiserror::Error;

use crate::device::DeviceError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("transistor `{element}`: {message}")]
    Model { element: String, message: String },
    #[error("node `{0}` has no DC path to ground (floating node)")]
    FloatingNode(String),
    #[error("singular circuit matrix")]
    Singular,
    #[error("DC operating point did not converge after gmin and source stepping (largest KCL residual {residual:e} A){}", .detail.as_ref().map(|d| format!(": {d}")).unwrap_or_default())]
    DcNonConvergence {
        residual: f64,
        last_iterate: Vec<(String, f64)>,
        detail: Option<String>,
    },
    #[error("time step fell below {min_step:e} s at t = {t:e} s")]
    StepTooSmall { t: f64, min_step: f64 },
    #[error("transistor `{element}`: {source}")]
    Device {
        element: String,
        #[source]
        source: DeviceError,
    },
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid simulator option: {0}")]
    Options(String),
}

impl SimError {
    /// True when the input was acceptable but the numerical solution failed.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            SimError::Singular | SimError::DcNonConvergence { .. } | SimError::StepTooSmall { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Relative truncation-error tolerance.
    pub reltol: f64,
    /// Absolute truncation-error tolerance, V.
    pub abstol: f64,
    /// Absolute Newton correction tolerance, V.
    pub vntol: f64,
    /// Relative Newton correction tolerance.
    pub newton_reltol: f64,
    /// KCL residual tolerance, A.
    pub kcl_tol: f64,
    /// Conductance from every node to ground, S.
    pub gmin: f64,
    /// Finite-difference step: max(fd_rel |v|, fd_abs).
    pub fd_rel: f64,
    pub fd_abs: f64,
    pub max_dc_iterations: usize,
    pub max_tran_iterations: usize,
    /// Largest node-voltage change per Newton iteration, V.
    pub step_limit: f64,
    pub min_step: f64,
    /// Defaults to t_stop / 100.
    pub max_step: Option<f64>,
    /// Step taken at t = 0 and after each breakpoint. Defaults to t_stop * 1e-6.
    pub first_step: Option<f64>,
    /// Skip the DC solution and start from `initial_conditions` (0 V elsewhere).
    pub uic: bool,
    pub initial_conditions: Vec<(String, f64)>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            reltol: 1e-3,
            abstol: 1e-6,
            vntol: 1e-6,
            newton_reltol: 1e-3,
            kcl_tol: 1e-9,
            gmin: 0.0,
            fd_rel: 1e-6,
            fd_abs: 1e-9,
            max_dc_iterations: 100,
            max_tran_iterations: 50,
            step_limit: 0.5,
            min_step: 1e-15,
            max_step: None,
            first_step: None,
            uic: false,
            initial_conditions: Vec::new(),
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("reltol", self.reltol),
            ("abstol", self.abstol),
            ("vntol", self.vntol),
            ("newton_reltol", self.newton_reltol),
            ("kcl_tol", self.kcl_tol),
            ("fd_rel", self.fd_rel),
            ("fd_abs", self.fd_abs),
            ("step_limit", self.step_limit),
            ("min_step", self.min_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Options(format!("{name} must be positive")));
            }
        }
        if !(self.gmin.is_finite() && self.gmin >= 0.0) {
            return Err(SimError::Options("gmin must be non-negative".into()));
        }
        for (name, v) in [("max_step", self.max_step), ("first_step", self.first_step)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(SimError::Options(format!("{name} must be positive")));
                }
            }
        }
        if self.max_dc_iterations == 0 || self.max_tran_iterations == 0 {
            return Err(SimError::Options(
                "iteration limits must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Applies the settings carried by a `.tran` card.
    pub fn with_analysis(mut self, analysis: &Analysis, net: &Netlist) -> Self {
        if let Analysis::Tran { max_step, uic, .. } = analysis {
            if max_step.is_some() {
                self.max_step = *max_step;
            }
            self.uic |= *uic;
        }
        if !net.initial_conditions.is_empty() {
            self.initial_conditions = net.initial_conditions.clone();
        }
        self
    }
}

//! The N and P lattices every clamp transistor is bound to.

use std::sync::Arc;

use crate::calibration::{
    calibrate_grid, BiasSpec, FitConfig, GridCalibration, NodeReference, OracleParams,
};
use crate::device::{ModelCard, Polarity};
use crate::grid::{DesignPoint, ModelGrid};
use crate::sim::ModelLibrary;

use super::ClampError;

/// Model name of the N lattice in clamp netlists.
pub const N_MODEL: &str = "gcm";
/// Model name of the P lattice in clamp netlists.
pub const P_MODEL: &str = "gcmp";

#[derive(Debug, Clone)]
pub struct ClampModels {
    pub n: Arc<ModelGrid>,
    pub p: Arc<ModelGrid>,
}

impl ClampModels {
    pub fn new(n: Arc<ModelGrid>, p: Arc<ModelGrid>) -> Result<Self, ClampError> {
        if n.polarity() != Polarity::N || p.polarity() != Polarity::P {
            return Err(ClampError::Config(
                "clamp models need an N grid and a P grid".into(),
            ));
        }
        Ok(Self { n, p })
    }

    /// Lattice used for clamp studies: Lg 14.5..20.5 nm and Wfin 4.1..8.1 nm
    /// in 1 nm steps, wide enough for 3-sigma Monte Carlo draws around POR.
    pub fn default_axes() -> (Vec<f64>, Vec<f64>) {
        let lg = (0..7).map(|i| 14.5 + i as f64).collect();
        let wfin = (0..5).map(|i| 4.1 + i as f64).collect();
        (lg, wfin)
    }

    /// Calibrates both lattices against the default oracles.
    pub fn from_default_oracle() -> Result<(Self, [GridCalibration; 2]), ClampError> {
        let (lg, wfin) = Self::default_axes();
        Self::from_oracle(
            &OracleParams::defaults(Polarity::N),
            &OracleParams::defaults(Polarity::P),
            &lg,
            &wfin,
            &BiasSpec::default(),
        )
    }

    pub fn from_oracle(
        n_params: &OracleParams,
        p_params: &OracleParams,
        lg: &[f64],
        wfin: &[f64],
        bias: &BiasSpec,
    ) -> Result<(Self, [GridCalibration; 2]), ClampError> {
        let fit = FitConfig::default();
        let cal = |params: &OracleParams| -> Result<GridCalibration, ClampError> {
            let refs = NodeReference::from_oracle(params, lg, wfin, bias)?;
            let template = ModelCard {
                polarity: params.polarity,
                ..ModelCard::reference()
            };
            Ok(calibrate_grid(
                ["lg", "wfin"],
                lg,
                wfin,
                &refs,
                &template,
                &fit,
            )?)
        };
        let (cn, cp) = (cal(n_params)?, cal(p_params)?);
        let models = Self::new(Arc::new(cn.grid.clone()), Arc::new(cp.grid.clone()))?;
        Ok((models, [cn, cp]))
    }

    /// True when both lattices cover `p`.
    pub fn contains(&self, p: &DesignPoint) -> bool {
        self.n.contains(p) && self.p.contains(p)
    }

    pub fn check(&self, p: &DesignPoint) -> Result<(), ClampError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(ClampError::OutOfHull {
                lg: p.axis1,
                wfin: p.axis2,
            })
        }
    }

    /// Pulls a point onto the hull shared by both lattices.
    pub fn clip(&self, p: DesignPoint) -> (DesignPoint, bool) {
        let (a, moved_n) = self.n.clip(p);
        let (b, moved_p) = self.p.clip(a);
        (b, moved_n || moved_p)
    }

    pub fn library(&self) -> ModelLibrary {
        let mut lib = ModelLibrary::new();
        lib.add_grid(N_MODEL, Arc::clone(&self.n));
        lib.add_grid(P_MODEL, Arc::clone(&self.p));
        lib
    }
}

//! Surrogate FinFET compact model and device-level characterization.
//!
//! Every lattice point of a [`crate::grid::ModelGrid`] holds one [`ModelCard`].
//! The card evaluates terminal currents and charges as smooth closed-form
//! functions of the four terminal voltages, which is all the circuit
//! simulator and the ensemble need from a compact model.

mod card_file;
mod characterize;
mod model;

pub use card_file::{parse_card, read_card, write_card, CardFileError, CARD_KEYS};
pub use characterize::{
    characterize, ideal_swing, ieff_at_target_ioff, CharError, CharOptions, CharReport,
};
pub use model::{thermal_voltage, BOLTZMANN, ELEMENTARY_CHARGE};

use std::fmt;

use thiserror::Error;

/// Guard on terminal voltage magnitudes.
pub const MAX_BIAS: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("bias {terminal} = {value} is not finite")]
    NonFiniteBias { terminal: &'static str, value: f64 },
    #[error("bias {terminal} = {value} V exceeds the {MAX_BIAS} V guard")]
    BiasOutOfRange { terminal: &'static str, value: f64 },
    #[error("invalid model card: {0}")]
    InvalidCard(String),
    #[error("fin count must be at least 1")]
    ZeroFins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    N,
    P,
}

impl Polarity {
    /// +1 for N, -1 for P.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::N => 1.0,
            Polarity::P => -1.0,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::N => "n",
            Polarity::P => "p",
        })
    }
}

/// Terminal potentials in volts, referenced to a common ground.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BiasPoint {
    pub vd: f64,
    pub vg: f64,
    pub vs: f64,
    pub vb: f64,
}

impl BiasPoint {
    pub fn new(vd: f64, vg: f64, vs: f64, vb: f64) -> Self {
        Self { vd, vg, vs, vb }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        for (terminal, value) in [
            ("vd", self.vd),
            ("vg", self.vg),
            ("vs", self.vs),
            ("vb", self.vb),
        ] {
            if !value.is_finite() {
                return Err(DeviceError::NonFiniteBias { terminal, value });
            }
            if value.abs() > MAX_BIAS {
                return Err(DeviceError::BiasOutOfRange { terminal, value });
            }
        }
        Ok(())
    }

    pub fn mirrored(&self) -> Self {
        Self {
            vd: -self.vd,
            vg: -self.vg,
            vs: -self.vs,
            vb: -self.vb,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.vd, self.vg, self.vs, self.vb]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            vd: v[0],
            vg: v[1],
            vs: v[2],
            vb: v[3],
        }
    }
}

/// Currents flowing into the device at each terminal, amperes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TerminalCurrents {
    pub id: f64,
    pub ig: f64,
    pub is: f64,
    pub ib: f64,
}

impl TerminalCurrents {
    pub fn as_array(&self) -> [f64; 4] {
        [self.id, self.ig, self.is, self.ib]
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            id: self.id * k,
            ig: self.ig * k,
            is: self.is * k,
            ib: self.ib * k,
        }
    }
}

/// Terminal charges, coulombs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TerminalCharges {
    pub qd: f64,
    pub qg: f64,
    pub qs: f64,
    pub qb: f64,
}

impl TerminalCharges {
    /// Same terminal order as [`BiasPoint::as_array`].
    pub fn as_array(&self) -> [f64; 4] {
        [self.qd, self.qg, self.qs, self.qb]
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            qd: self.qd * k,
            qg: self.qg * k,
            qs: self.qs * k,
            qb: self.qb * k,
        }
    }

    pub fn total(&self) -> f64 {
        self.qg + self.qd + self.qs + self.qb
    }
}

/// Currents and charges from one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeviceOutput {
    pub currents: TerminalCurrents,
    pub charges: TerminalCharges,
}

/// Geometry used by constant-current threshold extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub lg_nm: f64,
    pub weff_nm: f64,
}

/// Anything that maps terminal voltages to terminal currents and charges.
///
/// Implemented by single cards and by the lattice ensemble, so the circuit
/// simulator never needs to know which one it is driving.
pub trait TerminalModel: Send + Sync + fmt::Debug {
    fn polarity(&self) -> Polarity;

    fn geometry(&self) -> Geometry;

    fn evaluate(&self, bias: &BiasPoint, nfin: u32) -> Result<DeviceOutput, DeviceError>;

    fn currents(&self, bias: &BiasPoint, nfin: u32) -> Result<TerminalCurrents, DeviceError> {
        Ok(self.evaluate(bias, nfin)?.currents)
    }

    fn charges(&self, bias: &BiasPoint, nfin: u32) -> Result<TerminalCharges, DeviceError> {
        Ok(self.evaluate(bias, nfin)?.charges)
    }
}

/// Parameter set of one calibrated surrogate card.
///
/// Lengths are nanometres. Parameters always describe the N-type equations;
/// a P card evaluates them on mirrored voltages and returns mirrored outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCard {
    pub polarity: Polarity,
    /// Drawn gate length, nm.
    pub lg: f64,
    /// Fin width, nm.
    pub wfin: f64,
    /// Fin height, nm.
    pub hfin: f64,
    /// Fins per drawn device.
    pub nfin_unit: u32,
    /// Long-channel threshold, V.
    pub vt0: f64,
    /// Subthreshold slope factor.
    pub n_ss: f64,
    /// Threshold shift per drain volt, V/V.
    pub dibl: f64,
    /// Transconductance prefactor per square, A/V^2.
    pub k_gain: f64,
    /// Velocity-saturation degradation, 1/V.
    pub theta_sat: f64,
    /// Output-conductance factor, 1/V.
    pub lambda_clm: f64,
    /// Source resistance, ohm per fin.
    pub rs: f64,
    /// Drain resistance, ohm per fin.
    pub rd: f64,
    /// Overlap capacitance per side, F per fin.
    pub cov: f64,
    /// Maximum channel capacitance, F per fin.
    pub cch_max: f64,
    /// Kelvin.
    pub temp: f64,
}

impl Default for ModelCard {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModelCard {
    /// Hand-checkable N card with no parasitics.
    pub fn reference() -> Self {
        Self {
            polarity: Polarity::N,
            lg: 18.0,
            wfin: 6.0,
            hfin: 50.0,
            nfin_unit: 1,
            vt0: 0.30,
            n_ss: 1.2,
            dibl: 0.04,
            k_gain: 1.0e-4,
            theta_sat: 0.3,
            lambda_clm: 0.05,
            rs: 0.0,
            rd: 0.0,
            cov: 0.0,
            cch_max: 0.0,
            temp: 298.15,
        }
    }

    /// Effective electrical width per fin, nm.
    pub fn weff(&self) -> f64 {
        2.0 * self.hfin + self.wfin
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let bad = |msg: &str| Err(DeviceError::InvalidCard(msg.to_string()));
        let finite = [
            self.lg,
            self.wfin,
            self.hfin,
            self.vt0,
            self.n_ss,
            self.dibl,
            self.k_gain,
            self.theta_sat,
            self.lambda_clm,
            self.rs,
            self.rd,
            self.cov,
            self.cch_max,
            self.temp,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.lg <= 0.0 || self.wfin <= 0.0 || self.hfin <= 0.0 {
            return bad("lg, wfin and hfin must be positive");
        }
        if self.n_ss < 1.0 {
            return bad("n_ss must be at least 1");
        }
        if self.k_gain <= 0.0 {
            return bad("k_gain must be positive");
        }
        if self.cov < 0.0 || self.cch_max < 0.0 {
            return bad("capacitances must be non-negative");
        }
        if self.theta_sat < 0.0 || self.dibl < 0.0 || self.lambda_clm < 0.0 {
            return bad("theta_sat, dibl and lambda_clm must be non-negative");
        }
        if self.rs < 0.0 || self.rd < 0.0 {
            return bad("series resistances must be non-negative");
        }
        if self.temp <= 0.0 {
            return bad("temperature must be positive");
        }
        if self.nfin_unit == 0 {
            return bad("nfin_unit must be at least 1");
        }
        Ok(())
    }

    pub fn eval_terminal_currents(
        &self,
        bias: &BiasPoint,
        nfin: u32,
    ) -> Result<TerminalCurrents, DeviceError> {
        self.check(bias, nfin)?;
        Ok(model::currents(self, bias, nfin))
    }

    pub fn eval_terminal_charges(
        &self,
        bias: &BiasPoint,
        nfin: u32,
    ) -> Result<TerminalCharges, DeviceError> {
        self.check(bias, nfin)?;
        Ok(model::charges(self, bias, nfin))
    }

    fn check(&self, bias: &BiasPoint, nfin: u32) -> Result<(), DeviceError> {
        if nfin == 0 {
            return Err(DeviceError::ZeroFins);
        }
        self.validate()?;
        bias.validate()
    }
}

impl TerminalModel for ModelCard {
    fn polarity(&self) -> Polarity {
        self.polarity
    }

    fn geometry(&self) -> Geometry {
        Geometry {
            lg_nm: self.lg,
            weff_nm: self.weff(),
        }
    }

    fn evaluate(&self, bias: &BiasPoint, nfin: u32) -> Result<DeviceOutput, DeviceError> {
        self.check(bias, nfin)?;
        Ok(DeviceOutput {
            currents: model::currents(self, bias, nfin),
            charges: model::charges(self, bias, nfin),
        })
    }
}

#[cfg(test)]
mod tests;

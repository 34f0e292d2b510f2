//! Clamp configuration and ESD event descriptions.

use std::fmt::Write as _;

use crate::digest::config_digest;
use crate::grid::DesignPoint;
use crate::keyvalue::KeyValues;
use crate::units::format_length_nm;

use super::ClampError;

pub const CONFIG_KEYS: &[&str] = &[
    "r_timer",
    "c_timer",
    "c_rail",
    "stages",
    "stage_n_nfin",
    "stage_p_nfin",
    "stage_scale",
    "bigfet_nfin",
    "vdd_nom",
    "lg",
    "wfin",
    "por_lg",
    "por_wfin",
    "esd_peak",
    "esd_tau_rise",
    "esd_tau_decay",
    "esd_window",
    "t_ramp",
    "powerup_tail",
    "false_trigger_from",
    "false_trigger_settle",
    "false_trigger_rise",
    "recovery_window",
    "recovery_factor",
    "recovery_hold",
    "sigma_lg",
    "sigma_wfin",
];

/// Sizing, stimulus and measurement settings of the RC-triggered clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampConfig {
    /// Timer resistor from VDD to the trigger node, ohm.
    pub r_timer: f64,
    /// Timer capacitor from the trigger node to ground, F.
    pub c_timer: f64,
    /// Lumped VDD rail capacitance to ground, F. Zero leaves it out.
    pub c_rail: f64,
    /// Inverter stages between the trigger node and the BigFET gate. Must be odd.
    pub stages: u32,
    /// First-stage fin counts; stage k uses these times `stage_scale^k`.
    pub stage_n_nfin: u32,
    pub stage_p_nfin: u32,
    pub stage_scale: u32,
    pub bigfet_nfin: u32,
    pub vdd_nom: f64,
    /// Design point applied to every transistor, nm.
    pub point: DesignPoint,
    /// Process-of-record point used as the sweep baseline and Monte Carlo center.
    pub por: DesignPoint,
    pub esd_peak: f64,
    pub esd_tau_rise: f64,
    pub esd_tau_decay: f64,
    /// Clamp-voltage observation window, s.
    pub esd_window: f64,
    pub t_ramp: f64,
    /// Power-up observation continues this long after the ramp, s.
    pub powerup_tail: f64,
    /// VDD level before the false-trigger edge, as a fraction of vdd_nom.
    pub false_trigger_from: f64,
    pub false_trigger_settle: f64,
    pub false_trigger_rise: f64,
    /// Observation window after the false-trigger edge, s.
    pub recovery_window: f64,
    /// Recovery threshold as a multiple of the DC leakage.
    pub recovery_factor: f64,
    /// The BigFET current must stay below threshold this long, s.
    pub recovery_hold: f64,
    pub sigma_lg: f64,
    pub sigma_wfin: f64,
}

impl Default for ClampConfig {
    fn default() -> Self {
        let por = DesignPoint::new(18.0, 6.0);
        Self {
            r_timer: 2.0e5,
            c_timer: 10.0e-12,
            c_rail: 0.0,
            stages: 3,
            stage_n_nfin: 4,
            stage_p_nfin: 8,
            stage_scale: 4,
            bigfet_nfin: 20000,
            vdd_nom: 0.75,
            point: por,
            por,
            esd_peak: 1.33,
            esd_tau_rise: 10e-9,
            esd_tau_decay: 150e-9,
            esd_window: 1e-6,
            t_ramp: 6e-6,
            powerup_tail: 5e-6,
            false_trigger_from: 0.0,
            false_trigger_settle: 10e-6,
            false_trigger_rise: 1e-9,
            recovery_window: 50e-6,
            recovery_factor: 1.5,
            recovery_hold: 50e-9,
            sigma_lg: 0.5,
            sigma_wfin: 0.4,
        }
    }
}

impl ClampConfig {
    /// Parses a key = value file. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ClampError> {
        let kv = KeyValues::parse(text, CONFIG_KEYS)?;
        let d = Self::default();
        let num =
            |k: &str, def: f64| -> Result<f64, ClampError> { Ok(kv.number(k)?.unwrap_or(def)) };
        let len =
            |k: &str, def: f64| -> Result<f64, ClampError> { Ok(kv.length_nm(k)?.unwrap_or(def)) };
        let cnt =
            |k: &str, def: u32| -> Result<u32, ClampError> { Ok(kv.count(k)?.unwrap_or(def)) };
        let por = DesignPoint::new(len("por_lg", d.por.axis1)?, len("por_wfin", d.por.axis2)?);
        let cfg = Self {
            r_timer: num("r_timer", d.r_timer)?,
            c_timer: num("c_timer", d.c_timer)?,
            c_rail: num("c_rail", d.c_rail)?,
            stages: cnt("stages", d.stages)?,
            stage_n_nfin: cnt("stage_n_nfin", d.stage_n_nfin)?,
            stage_p_nfin: cnt("stage_p_nfin", d.stage_p_nfin)?,
            stage_scale: cnt("stage_scale", d.stage_scale)?,
            bigfet_nfin: cnt("bigfet_nfin", d.bigfet_nfin)?,
            vdd_nom: num("vdd_nom", d.vdd_nom)?,
            point: DesignPoint::new(len("lg", por.axis1)?, len("wfin", por.axis2)?),
            por,
            esd_peak: num("esd_peak", d.esd_peak)?,
            esd_tau_rise: num("esd_tau_rise", d.esd_tau_rise)?,
            esd_tau_decay: num("esd_tau_decay", d.esd_tau_decay)?,
            esd_window: num("esd_window", d.esd_window)?,
            t_ramp: num("t_ramp", d.t_ramp)?,
            powerup_tail: num("powerup_tail", d.powerup_tail)?,
            false_trigger_from: num("false_trigger_from", d.false_trigger_from)?,
            false_trigger_settle: num("false_trigger_settle", d.false_trigger_settle)?,
            false_trigger_rise: num("false_trigger_rise", d.false_trigger_rise)?,
            recovery_window: num("recovery_window", d.recovery_window)?,
            recovery_factor: num("recovery_factor", d.recovery_factor)?,
            recovery_hold: num("recovery_hold", d.recovery_hold)?,
            sigma_lg: len("sigma_lg", d.sigma_lg)?,
            sigma_wfin: len("sigma_wfin", d.sigma_wfin)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ClampError> {
        if self.stages.is_multiple_of(2) {
            return Err(ClampError::EvenStages(self.stages));
        }
        let counts = [
            ("stage_n_nfin", self.stage_n_nfin),
            ("stage_p_nfin", self.stage_p_nfin),
            ("stage_scale", self.stage_scale),
            ("bigfet_nfin", self.bigfet_nfin),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ClampError::Config(format!("{name} must be at least 1")));
            }
        }
        let positive = [
            ("r_timer", self.r_timer),
            ("c_timer", self.c_timer),
            ("vdd_nom", self.vdd_nom),
            ("esd_peak", self.esd_peak),
            ("esd_tau_rise", self.esd_tau_rise),
            ("esd_tau_decay", self.esd_tau_decay),
            ("esd_window", self.esd_window),
            ("t_ramp", self.t_ramp),
            ("powerup_tail", self.powerup_tail),
            ("false_trigger_settle", self.false_trigger_settle),
            ("false_trigger_rise", self.false_trigger_rise),
            ("recovery_window", self.recovery_window),
            ("recovery_factor", self.recovery_factor),
            ("recovery_hold", self.recovery_hold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ClampError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.c_rail.is_finite() && self.c_rail >= 0.0) {
            return Err(ClampError::Config("c_rail must be non-negative".into()));
        }
        if self.esd_tau_decay <= self.esd_tau_rise {
            return Err(ClampError::Config(
                "esd_tau_decay must exceed esd_tau_rise".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.false_trigger_from) {
            return Err(ClampError::Config(
                "false_trigger_from must be in [0, 1)".into(),
            ));
        }
        if !(self.sigma_lg >= 0.0 && self.sigma_wfin >= 0.0) {
            return Err(ClampError::Config(
                "sigma_lg and sigma_wfin must be non-negative".into(),
            ));
        }
        if self.recovery_hold >= self.recovery_window {
            return Err(ClampError::Config(
                "recovery_hold must be shorter than recovery_window".into(),
            ));
        }
        for p in [self.point, self.por] {
            p.validate()
                .map_err(|e| ClampError::Config(e.to_string()))?;
        }
        let top = u64::from(self.stage_p_nfin.max(self.stage_n_nfin))
            .saturating_mul(u64::from(self.stage_scale).saturating_pow(self.stages - 1));
        if top > u64::from(u32::MAX) {
            return Err(ClampError::Config("last-stage fin count overflows".into()));
        }
        Ok(())
    }

    /// Fin counts (N, P) of inverter stage `k`, counted from the trigger node.
    pub fn stage_nfin(&self, k: u32) -> (u32, u32) {
        let s = self.stage_scale.pow(k);
        (self.stage_n_nfin * s, self.stage_p_nfin * s)
    }

    pub fn with_point(&self, point: DesignPoint) -> Self {
        Self {
            point,
            ..self.clone()
        }
    }

    /// Every field in a fixed order; the digest of this text identifies the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("r_timer", format!("{:e}", self.r_timer));
        put("c_timer", format!("{:e}", self.c_timer));
        put("c_rail", format!("{:e}", self.c_rail));
        put("stages", self.stages.to_string());
        put("stage_n_nfin", self.stage_n_nfin.to_string());
        put("stage_p_nfin", self.stage_p_nfin.to_string());
        put("stage_scale", self.stage_scale.to_string());
        put("bigfet_nfin", self.bigfet_nfin.to_string());
        put("vdd_nom", format!("{:e}", self.vdd_nom));
        put("lg", format_length_nm(self.point.axis1));
        put("wfin", format_length_nm(self.point.axis2));
        put("por_lg", format_length_nm(self.por.axis1));
        put("por_wfin", format_length_nm(self.por.axis2));
        put("esd_peak", format!("{:e}", self.esd_peak));
        put("esd_tau_rise", format!("{:e}", self.esd_tau_rise));
        put("esd_tau_decay", format!("{:e}", self.esd_tau_decay));
        put("esd_window", format!("{:e}", self.esd_window));
        put("t_ramp", format!("{:e}", self.t_ramp));
        put("powerup_tail", format!("{:e}", self.powerup_tail));
        put(
            "false_trigger_from",
            format!("{:e}", self.false_trigger_from),
        );
        put(
            "false_trigger_settle",
            format!("{:e}", self.false_trigger_settle),
        );
        put(
            "false_trigger_rise",
            format!("{:e}", self.false_trigger_rise),
        );
        put("recovery_window", format!("{:e}", self.recovery_window));
        put("recovery_factor", format!("{:e}", self.recovery_factor));
        put("recovery_hold", format!("{:e}", self.recovery_hold));
        put("sigma_lg", format_length_nm(self.sigma_lg));
        put("sigma_wfin", format_length_nm(self.sigma_wfin));
        s
    }

    pub fn digest(&self) -> String {
        config_digest(&self.to_text())
    }
}

/// Stimulus applied to the clamp for one measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EsdEvent {
    /// Double-exponential current into a floating VDD rail.
    EsdPulse,
    /// VDD ramp from 0 to vdd_nom.
    PowerUp,
    /// Fast VDD edge after the rail has settled.
    FalseTrigger,
    /// DC operating point at vdd_nom.
    Leakage,
}

impl EsdEvent {
    pub const ALL: [EsdEvent; 4] = [
        EsdEvent::EsdPulse,
        EsdEvent::PowerUp,
        EsdEvent::FalseTrigger,
        EsdEvent::Leakage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EsdEvent::EsdPulse => "esd_pulse",
            EsdEvent::PowerUp => "powerup",
            EsdEvent::FalseTrigger => "false_trigger",
            EsdEvent::Leakage => "leakage",
        }
    }
}

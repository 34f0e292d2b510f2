//! RC-triggered power clamp netlist.

use crate::sim::{Analysis, ElementKind, Netlist, Stimulus, GROUND};

use super::models::{N_MODEL, P_MODEL};
use super::{ClampConfig, ClampError, EsdEvent};

pub const VDD: &str = "vdd";
pub const TRIG: &str = "trig";
pub const GATE: &str = "gate";
/// Voltage source on the rail (absent for the ESD pulse).
pub const SUPPLY: &str = "vsup";
pub const BIGFET: &str = "mbig";

/// Observation window of an event, s. Zero for the DC event.
pub fn event_window(cfg: &ClampConfig, event: EsdEvent) -> f64 {
    match event {
        EsdEvent::EsdPulse => cfg.esd_window,
        EsdEvent::PowerUp => cfg.t_ramp + cfg.powerup_tail,
        EsdEvent::FalseTrigger => false_trigger_edge_end(cfg) + cfg.recovery_window,
        EsdEvent::Leakage => 0.0,
    }
}

pub fn false_trigger_edge_end(cfg: &ClampConfig) -> f64 {
    cfg.false_trigger_settle + cfg.false_trigger_rise
}

fn node(s: &str) -> String {
    s.to_string()
}

/// Timer R from VDD to `trig`, C from `trig` to ground, an odd inverter chain
/// from `trig` to the BigFET gate, and the BigFET from VDD to ground.
pub fn build_clamp_netlist(cfg: &ClampConfig, event: EsdEvent) -> Result<Netlist, ClampError> {
    cfg.validate()?;
    let mut net = Netlist::new();
    match event {
        EsdEvent::EsdPulse => {
            let stim = Stimulus::dexp_with_peak(cfg.esd_peak, cfg.esd_tau_rise, cfg.esd_tau_decay)
                .map_err(|e| ClampError::Config(e.to_string()))?;
            net.push(
                "iesd",
                ElementKind::CurrentSource {
                    pos: node(GROUND),
                    neg: node(VDD),
                    stimulus: stim,
                },
            );
        }
        EsdEvent::PowerUp => {
            let stim = Stimulus::ramp(0.0, cfg.t_ramp, cfg.vdd_nom)
                .map_err(|e| ClampError::Config(e.to_string()))?;
            net.push(
                SUPPLY,
                ElementKind::VoltageSource {
                    pos: node(VDD),
                    neg: node(GROUND),
                    stimulus: stim,
                },
            );
        }
        EsdEvent::FalseTrigger => {
            let v0 = cfg.false_trigger_from * cfg.vdd_nom;
            let stim = Stimulus::pwl(vec![
                (0.0, v0),
                (cfg.false_trigger_settle, v0),
                (false_trigger_edge_end(cfg), cfg.vdd_nom),
            ])
            .map_err(|e| ClampError::Config(e.to_string()))?;
            net.push(
                SUPPLY,
                ElementKind::VoltageSource {
                    pos: node(VDD),
                    neg: node(GROUND),
                    stimulus: stim,
                },
            );
        }
        EsdEvent::Leakage => {
            net.push(
                SUPPLY,
                ElementKind::VoltageSource {
                    pos: node(VDD),
                    neg: node(GROUND),
                    stimulus: Stimulus::Dc(cfg.vdd_nom),
                },
            );
        }
    }
    net.push(
        "rtimer",
        ElementKind::Resistor {
            n1: node(VDD),
            n2: node(TRIG),
            ohms: cfg.r_timer,
        },
    );
    net.push(
        "ctimer",
        ElementKind::Capacitor {
            n1: node(TRIG),
            n2: node(GROUND),
            farads: cfg.c_timer,
        },
    );
    if cfg.c_rail > 0.0 {
        net.push(
            "crail",
            ElementKind::Capacitor {
                n1: node(VDD),
                n2: node(GROUND),
                farads: cfg.c_rail,
            },
        );
    }
    let point = Some(cfg.point);
    let mut input = node(TRIG);
    for k in 0..cfg.stages {
        let output = if k + 1 == cfg.stages {
            node(GATE)
        } else {
            format!("inv{}", k + 1)
        };
        let (nn, np) = cfg.stage_nfin(k);
        net.push(
            &format!("mp{}", k + 1),
            ElementKind::Transistor {
                d: output.clone(),
                g: input.clone(),
                s: node(VDD),
                b: node(VDD),
                model: P_MODEL.into(),
                point,
                nfin: np,
            },
        );
        net.push(
            &format!("mn{}", k + 1),
            ElementKind::Transistor {
                d: output.clone(),
                g: input.clone(),
                s: node(GROUND),
                b: node(GROUND),
                model: N_MODEL.into(),
                point,
                nfin: nn,
            },
        );
        input = output;
    }
    net.push(
        BIGFET,
        ElementKind::Transistor {
            d: node(VDD),
            g: node(GATE),
            s: node(GROUND),
            b: node(GROUND),
            model: N_MODEL.into(),
            point,
            nfin: cfg.bigfet_nfin,
        },
    );
    net.analyses.push(match event {
        EsdEvent::Leakage => Analysis::Op,
        other => Analysis::Tran {
            t_stop: event_window(cfg, other),
            max_step: None,
            uic: false,
        },
    });
    net.validate()?;
    Ok(net)
}

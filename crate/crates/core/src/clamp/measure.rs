//! The four clamp metrics.

use std::fmt;

use crate::grid::DesignPoint;
use crate::sim::{Circuit, SimError, SimOptions, TransientResult};

use super::netlist::{
    build_clamp_netlist, event_window, false_trigger_edge_end, BIGFET, SUPPLY, VDD,
};
use super::{ClampConfig, ClampError, ClampModels, EsdEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    ClampVoltage,
    Leakage,
    PeakPowerupCurrent,
    RecoveryTime,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::ClampVoltage,
        Metric::Leakage,
        Metric::PeakPowerupCurrent,
        Metric::RecoveryTime,
    ];

    pub fn event(self) -> EsdEvent {
        match self {
            Metric::ClampVoltage => EsdEvent::EsdPulse,
            Metric::Leakage => EsdEvent::Leakage,
            Metric::PeakPowerupCurrent => EsdEvent::PowerUp,
            Metric::RecoveryTime => EsdEvent::FalseTrigger,
        }
    }

    /// Column name used in sweep and Monte Carlo CSVs.
    pub fn column(self) -> &'static str {
        match self {
            Metric::ClampVoltage => "clamp_v",
            Metric::Leakage => "leak_a",
            Metric::PeakPowerupCurrent => "peak_a",
            Metric::RecoveryTime => "recovery_s",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clamp_voltage" | "clamp_v" | "clamp" => Some(Metric::ClampVoltage),
            "leakage" | "leak" | "leak_a" => Some(Metric::Leakage),
            "peak_powerup_current" | "powerup" | "peak" | "peak_a" => {
                Some(Metric::PeakPowerupCurrent)
            }
            "recovery_time" | "recovery" | "recovery_s" => Some(Metric::RecoveryTime),
            _ => None,
        }
    }

    pub fn of(self, r: &MetricsReport) -> f64 {
        match self {
            Metric::ClampVoltage => r.clamp_voltage,
            Metric::Leakage => r.leakage,
            Metric::PeakPowerupCurrent => r.peak_powerup_current,
            Metric::RecoveryTime => r.recovery_time,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::ClampVoltage => "clamp_voltage",
            Metric::Leakage => "leakage",
            Metric::PeakPowerupCurrent => "peak_powerup_current",
            Metric::RecoveryTime => "recovery_time",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub point: DesignPoint,
    /// Peak VDD during the ESD pulse, V.
    pub clamp_voltage: f64,
    /// Supply current at DC, A.
    pub leakage: f64,
    /// Peak supply current during power-up, A.
    pub peak_powerup_current: f64,
    /// BigFET turn-off time after a false trigger, s. Equal to the
    /// observation window when `recovery_resolved` is false.
    pub recovery_time: f64,
    pub recovery_resolved: bool,
    /// Largest KCL residual over every solved point behind this report, A.
    pub max_kcl_residual: f64,
    pub config_digest: String,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str =
        "lg_nm,wfin_nm,clamp_v,leak_a,peak_a,recovery_s,recovery_resolved,config_digest";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{:e},{},{}",
            self.point.axis1,
            self.point.axis2,
            self.clamp_voltage,
            self.leakage,
            self.peak_powerup_current,
            self.recovery_time,
            self.recovery_resolved,
            self.config_digest
        )
    }
}

/// One metric plus the bookkeeping needed to assemble a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Measured {
    pub value: f64,
    pub resolved: bool,
    pub max_kcl: f64,
}

fn sim_err(event: EsdEvent) -> impl Fn(SimError) -> ClampError {
    move |source| ClampError::Sim {
        event: event.name(),
        source,
    }
}

fn circuit(
    cfg: &ClampConfig,
    models: &ClampModels,
    event: EsdEvent,
) -> Result<Circuit, ClampError> {
    models.check(&cfg.point)?;
    let net = build_clamp_netlist(cfg, event)?;
    Circuit::new(&net, &models.library()).map_err(sim_err(event))
}

fn transient(
    cfg: &ClampConfig,
    models: &ClampModels,
    event: EsdEvent,
) -> Result<(Circuit, TransientResult), ClampError> {
    let ckt = circuit(cfg, models, event)?;
    let res = ckt
        .solve_transient(event_window(cfg, event), &SimOptions::default())
        .map_err(sim_err(event))?;
    Ok((ckt, res))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

pub(crate) fn leakage(cfg: &ClampConfig, models: &ClampModels) -> Result<Measured, ClampError> {
    let ev = EsdEvent::Leakage;
    let ckt = circuit(cfg, models, ev)?;
    let dc = ckt.solve_dc(&SimOptions::default()).map_err(sim_err(ev))?;
    let i = dc.branch_current(SUPPLY).expect("clamp supply present");
    Ok(Measured {
        value: i.abs(),
        resolved: true,
        max_kcl: dc.residual,
    })
}

pub(crate) fn clamp_voltage(
    cfg: &ClampConfig,
    models: &ClampModels,
) -> Result<Measured, ClampError> {
    let (_, res) = transient(cfg, models, EsdEvent::EsdPulse)?;
    let v = res.voltage(VDD).expect("vdd node present");
    Ok(Measured {
        value: max_of(&v),
        resolved: true,
        max_kcl: max_of(&res.kcl_residuals),
    })
}

pub(crate) fn peak_powerup(
    cfg: &ClampConfig,
    models: &ClampModels,
) -> Result<Measured, ClampError> {
    let (_, res) = transient(cfg, models, EsdEvent::PowerUp)?;
    let i: Vec<f64> = res
        .branch_current(SUPPLY)
        .expect("clamp supply present")
        .iter()
        .map(|x| x.abs())
        .collect();
    Ok(Measured {
        value: max_of(&i),
        resolved: true,
        max_kcl: max_of(&res.kcl_residuals),
    })
}

/// Time from the end of the false-trigger edge until the BigFET drain current
/// drops below `recovery_factor` times the DC leakage and stays there for
/// `recovery_hold`.
pub(crate) fn recovery(
    cfg: &ClampConfig,
    models: &ClampModels,
    leak: f64,
) -> Result<Measured, ClampError> {
    let ev = EsdEvent::FalseTrigger;
    let (ckt, res) = transient(cfg, models, ev)?;
    let mut id = Vec::with_capacity(res.len());
    for x in &res.states {
        id.push(
            ckt.device_currents(BIGFET, x)
                .map_err(sim_err(ev))?
                .id
                .abs(),
        );
    }
    let threshold = cfg.recovery_factor * leak;
    let t0 = false_trigger_edge_end(cfg);
    let t_end = *res.times.last().expect("non-empty transient");
    let max_kcl = max_of(&res.kcl_residuals);
    let unresolved = Measured {
        value: t_end - t0,
        resolved: false,
        max_kcl,
    };
    let start = res.times.partition_point(|&t| t < t0);
    if start >= res.len() {
        return Ok(unresolved);
    }
    let mut k = start;
    while k < res.len() {
        if id[k] >= threshold {
            k += 1;
            continue;
        }
        // Crossing time, linear between the bracketing accepted points.
        let tc = if k == start || k == 0 {
            res.times[k]
        } else {
            let (ta, tb, ia, ib) = (res.times[k - 1], res.times[k], id[k - 1], id[k]);
            ta + (tb - ta) * (ia - threshold) / (ia - ib)
        };
        let hold_end = tc + cfg.recovery_hold;
        if hold_end > t_end {
            return Ok(unresolved);
        }
        match (k..res.len()).find(|&j| res.times[j] <= hold_end && id[j] >= threshold) {
            Some(j) => k = j + 1,
            None => {
                let after = res.times.partition_point(|&t| t <= hold_end);
                if after < res.len() && id[after] >= threshold {
                    k = after + 1;
                    continue;
                }
                return Ok(Measured {
                    value: (tc - t0).max(0.0),
                    resolved: true,
                    max_kcl,
                });
            }
        }
    }
    Ok(unresolved)
}

/// Measures one metric at `cfg.point`.
pub fn measure(cfg: &ClampConfig, models: &ClampModels, metric: Metric) -> Result<f64, ClampError> {
    Ok(match metric {
        Metric::ClampVoltage => clamp_voltage(cfg, models)?.value,
        Metric::Leakage => leakage(cfg, models)?.value,
        Metric::PeakPowerupCurrent => peak_powerup(cfg, models)?.value,
        Metric::RecoveryTime => {
            let leak = leakage(cfg, models)?.value;
            recovery(cfg, models, leak)?.value
        }
    })
}

/// All four metrics at `cfg.point`.
pub fn measure_all(cfg: &ClampConfig, models: &ClampModels) -> Result<MetricsReport, ClampError> {
    let leak = leakage(cfg, models)?;
    let clamp = clamp_voltage(cfg, models)?;
    let peak = peak_powerup(cfg, models)?;
    let rec = recovery(cfg, models, leak.value)?;
    Ok(MetricsReport {
        point: cfg.point,
        clamp_voltage: clamp.value,
        leakage: leak.value,
        peak_powerup_current: peak.value,
        recovery_time: rec.value,
        recovery_resolved: rec.resolved,
        max_kcl_residual: [leak.max_kcl, clamp.max_kcl, peak.max_kcl, rec.max_kcl]
            .into_iter()
            .fold(0.0, f64::max),
        config_digest: cfg.digest(),
    })
}

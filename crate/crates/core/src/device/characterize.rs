//! DC and gate-capacitance figures of merit for a card or an ensemble.

use thiserror::Error;

use super::{thermal_voltage, BiasPoint, DeviceError, ModelCard, TerminalModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharError {
    #[error("vdd must be positive, got {0}")]
    BadSupply(f64),
    #[error("extraction failed: {quantity} criterion not bracketed in gate sweep [{lo}, {hi}] V")]
    NotBracketed {
        quantity: &'static str,
        lo: f64,
        hi: f64,
    },
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Extraction settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CharOptions {
    /// Constant-current threshold criterion, amperes per square (times Weff*nfin/lg).
    pub vt_current_per_square: f64,
    /// Drain bias of the linear-region measurements, V.
    pub vds_lin: f64,
    /// SS and DIBL are read this many decades below the threshold criterion.
    pub subthreshold_decades: f64,
    pub nfin: u32,
}

impl Default for CharOptions {
    fn default() -> Self {
        Self {
            vt_current_per_square: 100e-9,
            vds_lin: 0.05,
            subthreshold_decades: 3.0,
            nfin: 1,
        }
    }
}

/// All currents are magnitudes; voltages are magnitudes for P devices too.
#[derive(Debug, Clone, PartialEq)]
pub struct CharReport {
    pub ioff: f64,
    pub ion: f64,
    pub ieff: f64,
    pub vt_lin: f64,
    pub vt_sat: f64,
    /// mV/dec
    pub ss: f64,
    /// mV/V
    pub dibl_meas: f64,
    pub cgg: f64,
    pub cov_meas: f64,
    pub cch_meas: f64,
    pub ron: f64,
}

impl CharReport {
    pub const CSV_HEADER: &'static str =
        "ioff_a,ion_a,ieff_a,vt_lin_v,vt_sat_v,ss_mv_dec,dibl_mv_v,cgg_f,cov_f,cch_f,ron_ohm";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.ioff,
            self.ion,
            self.ieff,
            self.vt_lin,
            self.vt_sat,
            self.ss,
            self.dibl_meas,
            self.cgg,
            self.cov_meas,
            self.cch_meas,
            self.ron
        )
    }
}

struct Probe<'a, M: TerminalModel + ?Sized> {
    model: &'a M,
    sign: f64,
    nfin: u32,
}

impl<M: TerminalModel + ?Sized> Probe<'_, M> {
    fn bias(&self, vgs: f64, vds: f64) -> BiasPoint {
        BiasPoint::new(self.sign * vds, self.sign * vgs, 0.0, 0.0)
    }

    fn id(&self, vgs: f64, vds: f64) -> Result<f64, DeviceError> {
        Ok(self
            .model
            .currents(&self.bias(vgs, vds), self.nfin)?
            .id
            .abs())
    }

    /// Gate voltage magnitude at which |Id| reaches `target`.
    fn gate_for_current(
        &self,
        target: f64,
        vds: f64,
        span: (f64, f64),
        quantity: &'static str,
    ) -> Result<f64, CharError> {
        let (mut lo, mut hi) = span;
        let f = |vg: f64| -> Result<f64, DeviceError> { Ok(self.id(vg, vds)?.ln() - target.ln()) };
        let (flo, fhi) = (f(lo)?, f(hi)?);
        if !(flo <= 0.0 && fhi >= 0.0) || !flo.is_finite() || !fhi.is_finite() {
            return Err(CharError::NotBracketed { quantity, lo, hi });
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// dQg/dVg by central difference, gate voltage in the device's own sign.
    fn cgg(&self, vgs: f64, vds: f64) -> Result<f64, DeviceError> {
        let h = 1e-4;
        let up = self.model.charges(&self.bias(vgs + h, vds), self.nfin)?.qg;
        let dn = self.model.charges(&self.bias(vgs - h, vds), self.nfin)?.qg;
        Ok(self.sign * (up - dn) / (2.0 * h))
    }
}

/// Characterizes any terminal model at supply `vdd`.
pub fn characterize<M: TerminalModel + ?Sized>(
    model: &M,
    vdd: f64,
    opts: &CharOptions,
) -> Result<CharReport, CharError> {
    if !(vdd > 0.0 && vdd.is_finite()) {
        return Err(CharError::BadSupply(vdd));
    }
    let probe = Probe {
        model,
        sign: model.polarity().sign(),
        nfin: opts.nfin.max(1),
    };
    let geom = model.geometry();
    let i_crit = opts.vt_current_per_square * geom.weff_nm * probe.nfin as f64 / geom.lg_nm;
    let i_sub = i_crit * 10f64.powf(-opts.subthreshold_decades);
    let span = (-vdd, 2.0 * vdd);

    let ioff = probe.id(0.0, vdd)?;
    let ion = probe.id(vdd, vdd)?;
    let ih = probe.id(vdd, vdd / 2.0)?;
    let il = probe.id(vdd / 2.0, vdd)?;
    let vt_lin = probe.gate_for_current(i_crit, opts.vds_lin, span, "vt_lin")?;
    let vt_sat = probe.gate_for_current(i_crit, vdd, span, "vt_sat")?;

    let vsub_sat = probe.gate_for_current(i_sub, vdd, span, "subthreshold point (saturation)")?;
    let vsub_lin =
        probe.gate_for_current(i_sub, opts.vds_lin, span, "subthreshold point (linear)")?;
    let h = 1e-3;
    let decades = probe.id(vsub_sat + h, vdd)?.log10() - probe.id(vsub_sat - h, vdd)?.log10();
    let ss = 2.0 * h / decades * 1e3;
    let dibl_meas = (vsub_lin - vsub_sat) / (vdd - opts.vds_lin) * 1e3;

    let cgg = probe.cgg(vdd, vdd)?;
    let cov_meas = 0.5 * probe.cgg(-vdd, 0.0)?;
    let cch_meas = cgg - 2.0 * cov_meas;
    let ron = opts.vds_lin / probe.id(vdd, opts.vds_lin)?;

    Ok(CharReport {
        ioff,
        ion,
        ieff: 0.5 * (ih + il),
        vt_lin,
        vt_sat,
        ss,
        dibl_meas,
        cgg,
        cov_meas,
        cch_meas,
        ron,
    })
}

/// Shifts `vt0` until Ioff (Vgs = 0, Vds = vdd) equals `ioff_target`, then
/// returns the effective drive current of the shifted card and the shift.
pub fn ieff_at_target_ioff(
    card: &ModelCard,
    vdd: f64,
    ioff_target: f64,
) -> Result<(f64, f64), CharError> {
    if vdd.is_nan() || vdd <= 0.0 {
        return Err(CharError::BadSupply(vdd));
    }
    let shifted = |dv: f64| ModelCard {
        vt0: card.vt0 + dv,
        ..card.clone()
    };
    let ioff_of = |dv: f64| -> Result<f64, CharError> {
        let c = shifted(dv);
        let opts = Probe {
            model: &c,
            sign: c.polarity.sign(),
            nfin: 1,
        };
        Ok(opts.id(0.0, vdd)?)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    // Ioff falls as vt0 rises.
    if ioff_of(lo)? < ioff_target || ioff_of(hi)? > ioff_target {
        return Err(CharError::NotBracketed {
            quantity: "target ioff",
            lo,
            hi,
        });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ioff_of(mid)? > ioff_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dv = 0.5 * (lo + hi);
    let c = shifted(dv);
    let probe = Probe {
        model: &c,
        sign: c.polarity.sign(),
        nfin: 1,
    };
    let ieff = 0.5 * (probe.id(vdd, vdd / 2.0)? + probe.id(vdd / 2.0, vdd)?);
    Ok((ieff, dv))
}

/// Analytic subthreshold swing of the surrogate, mV/dec.
pub fn ideal_swing(card: &ModelCard) -> f64 {
    card.n_ss * thermal_voltage(card.temp) * std::f64::consts::LN_10 * 1e3
}

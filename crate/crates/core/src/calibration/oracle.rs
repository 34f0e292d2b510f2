//! Analytic stand-in for TCAD reference data.
//!
//! The oracle carries the device trends over (Lg, Wfin) and one piece of
//! physics the surrogate card does not have (vertical-field mobility
//! degradation), so that extraction has real residuals to minimize.

use crate::device::{thermal_voltage, BiasPoint, ModelCard, Polarity};
use crate::grid::DesignPoint;
use crate::keyvalue::KeyValues;

use super::{BiasSpec, CalibError, CggDataset, CggRow, IvDataset, IvRow};

pub const ORACLE_KEYS: &[&str] = &[
    "polarity",
    "vt_base",
    "vt_rolloff",
    "vt_rolloff_len",
    "n0",
    "ss_rolloff",
    "k0",
    "wc",
    "p",
    "d0",
    "dibl_len",
    "alpha",
    "theta_ref",
    "theta_exp",
    "lambda_clm",
    "mobility_field",
    "hfin",
    "cov_per_nm",
    "cch_per_nm2",
    "temp",
    "lg_min",
    "lg_max",
    "wfin_min",
    "wfin_max",
];

#[derive(Debug, Clone, PartialEq)]
pub struct OracleParams {
    pub polarity: Polarity,
    /// Long-channel threshold, V.
    pub vt_base: f64,
    /// Threshold roll-off amplitude, V.
    pub vt_rolloff: f64,
    /// Threshold roll-off length, nm.
    pub vt_rolloff_len: f64,
    /// Long-channel slope factor.
    pub n0: f64,
    /// Short-channel slope degradation amplitude.
    pub ss_rolloff: f64,
    /// Wide-fin transconductance limit, A/V^2.
    pub k0: f64,
    /// Mobility-degradation width, nm.
    pub wc: f64,
    /// Mobility-degradation exponent.
    pub p: f64,
    /// DIBL prefactor, V/V.
    pub d0: f64,
    /// DIBL decay length, nm.
    pub dibl_len: f64,
    /// Fin-width exponent of the electrostatic terms.
    pub alpha: f64,
    /// Velocity-saturation coefficient at Lg = 18 nm, 1/V.
    pub theta_ref: f64,
    /// Gate-length exponent of the velocity-saturation coefficient.
    pub theta_exp: f64,
    pub lambda_clm: f64,
    /// Vertical-field mobility degradation, 1/V.
    pub mobility_field: f64,
    pub hfin: f64,
    /// Overlap capacitance per nm of effective width, F/nm.
    pub cov_per_nm: f64,
    /// Channel capacitance per nm^2 of gate area, F/nm^2.
    pub cch_per_nm2: f64,
    pub temp: f64,
    pub lg_min: f64,
    pub lg_max: f64,
    pub wfin_min: f64,
    pub wfin_max: f64,
}

impl OracleParams {
    pub fn defaults(polarity: Polarity) -> Self {
        let n = Self {
            polarity: Polarity::N,
            vt_base: 0.33,
            vt_rolloff: 0.6,
            vt_rolloff_len: 6.0,
            n0: 1.05,
            ss_rolloff: 2.0,
            k0: 1.0e-4,
            wc: 3.0,
            p: 2.0,
            d0: 0.5,
            dibl_len: 7.0,
            alpha: 1.0,
            theta_ref: 1.2,
            theta_exp: 3.0,
            lambda_clm: 0.05,
            mobility_field: 0.15,
            hfin: 50.0,
            cov_per_nm: 1.9e-19,
            cch_per_nm2: 3.1e-20,
            temp: 298.15,
            lg_min: 10.0,
            lg_max: 30.0,
            wfin_min: 3.0,
            wfin_max: 12.0,
        };
        match polarity {
            Polarity::N => n,
            Polarity::P => Self {
                polarity: Polarity::P,
                k0: 0.8e-4,
                vt_base: 0.34,
                ..n
            },
        }
    }

    /// Parses an oracle config. Missing keys take the defaults of the stated polarity.
    pub fn parse(text: &str) -> Result<Self, CalibError> {
        let kv = KeyValues::parse(text, ORACLE_KEYS)?;
        let polarity = match kv.raw("polarity").map(|(_, v)| v.to_ascii_lowercase()) {
            None => Polarity::N,
            Some(v) if v == "n" => Polarity::N,
            Some(v) if v == "p" => Polarity::P,
            Some(v) => {
                return Err(CalibError::Config(format!(
                    "polarity must be n or p, got `{v}`"
                )))
            }
        };
        let d = Self::defaults(polarity);
        let num =
            |k: &str, def: f64| -> Result<f64, CalibError> { Ok(kv.number(k)?.unwrap_or(def)) };
        let len =
            |k: &str, def: f64| -> Result<f64, CalibError> { Ok(kv.length_nm(k)?.unwrap_or(def)) };
        let p = Self {
            polarity,
            vt_base: num("vt_base", d.vt_base)?,
            vt_rolloff: num("vt_rolloff", d.vt_rolloff)?,
            vt_rolloff_len: len("vt_rolloff_len", d.vt_rolloff_len)?,
            n0: num("n0", d.n0)?,
            ss_rolloff: num("ss_rolloff", d.ss_rolloff)?,
            k0: num("k0", d.k0)?,
            wc: len("wc", d.wc)?,
            p: num("p", d.p)?,
            d0: num("d0", d.d0)?,
            dibl_len: len("dibl_len", d.dibl_len)?,
            alpha: num("alpha", d.alpha)?,
            theta_ref: num("theta_ref", d.theta_ref)?,
            theta_exp: num("theta_exp", d.theta_exp)?,
            lambda_clm: num("lambda_clm", d.lambda_clm)?,
            mobility_field: num("mobility_field", d.mobility_field)?,
            hfin: len("hfin", d.hfin)?,
            cov_per_nm: num("cov_per_nm", d.cov_per_nm)?,
            cch_per_nm2: num("cch_per_nm2", d.cch_per_nm2)?,
            temp: num("temp", d.temp)?,
            lg_min: len("lg_min", d.lg_min)?,
            lg_max: len("lg_max", d.lg_max)?,
            wfin_min: len("wfin_min", d.wfin_min)?,
            wfin_max: len("wfin_max", d.wfin_max)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CalibError> {
        let lengths = [
            self.vt_rolloff_len,
            self.wc,
            self.dibl_len,
            self.hfin,
            self.lg_min,
            self.lg_max,
            self.wfin_min,
            self.wfin_max,
        ];
        if lengths.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CalibError::Config(
                "all oracle lengths must be positive".into(),
            ));
        }
        if self.lg_min >= self.lg_max || self.wfin_min >= self.wfin_max {
            return Err(CalibError::Config("empty validity box".into()));
        }
        if self.n0 < 1.0 || self.k0 <= 0.0 || self.temp <= 0.0 {
            return Err(CalibError::Config(
                "n0 must be >= 1, k0 and temp positive".into(),
            ));
        }
        let nonneg = [
            self.ss_rolloff,
            self.d0,
            self.theta_ref,
            self.lambda_clm,
            self.mobility_field,
            self.cov_per_nm,
            self.cch_per_nm2,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CalibError::Config(
                "trend coefficients must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn check_point(&self, point: &DesignPoint) -> Result<(), CalibError> {
        let inside = (self.lg_min..=self.lg_max).contains(&point.axis1)
            && (self.wfin_min..=self.wfin_max).contains(&point.axis2);
        if inside {
            Ok(())
        } else {
            Err(CalibError::OutsideValidity {
                lg: point.axis1,
                wfin: point.axis2,
            })
        }
    }

    /// Surrogate-form parameters carried by the oracle at `point`.
    pub fn trend_card(&self, point: &DesignPoint) -> Result<ModelCard, CalibError> {
        self.check_point(point)?;
        let (lg, wfin) = (point.axis1, point.axis2);
        let fin = (wfin / 6.0).powf(self.alpha);
        let weff = 2.0 * self.hfin + wfin;
        Ok(ModelCard {
            polarity: self.polarity,
            lg,
            wfin,
            hfin: self.hfin,
            nfin_unit: 1,
            vt0: self.vt_base - self.vt_rolloff * (-lg / self.vt_rolloff_len).exp() * fin,
            n_ss: self.n0 + self.ss_rolloff * (-lg / self.dibl_len).exp() * fin,
            dibl: self.d0 * (-lg / self.dibl_len).exp() * fin,
            k_gain: self.k0 / (1.0 + (self.wc / wfin).powf(self.p)),
            theta_sat: self.theta_ref * (18.0 / lg).powf(self.theta_exp),
            lambda_clm: self.lambda_clm,
            rs: 0.0,
            rd: 0.0,
            cov: self.cov_per_nm * weff,
            cch_max: self.cch_per_nm2 * weff * lg,
            temp: self.temp,
        })
    }

    /// Reference drain current per fin.
    pub fn drain_current(&self, card: &ModelCard, vg: f64, vd: f64) -> Result<f64, CalibError> {
        let bias = BiasPoint::new(vd, vg, 0.0, 0.0);
        let base = card.eval_terminal_currents(&bias, 1)?.id;
        // Vertical field follows the gate overdrive against the source.
        let s = self.polarity.sign();
        let nphit = card.n_ss * thermal_voltage(card.temp);
        let x = (s * vg - card.vt0) / nphit;
        let overdrive = nphit
            * if x > 0.0 {
                x + (-x).exp().ln_1p()
            } else {
                x.exp().ln_1p()
            };
        Ok(base / (1.0 + self.mobility_field * overdrive))
    }

    /// Effective drive current per fin after shifting the threshold so that
    /// Ioff (Vgs = 0, Vds = vdd) equals `ioff_target`.
    pub fn ieff_at_target_ioff(
        &self,
        point: &DesignPoint,
        vdd: f64,
        ioff_target: f64,
    ) -> Result<f64, CalibError> {
        let base = self.trend_card(point)?;
        let s = self.polarity.sign();
        let shifted = |dv: f64| ModelCard {
            vt0: base.vt0 + dv,
            ..base.clone()
        };
        let ioff = |dv: f64| self.drain_current(&shifted(dv), 0.0, s * vdd).map(f64::abs);
        let (mut lo, mut hi) = (-1.0, 1.0);
        if ioff(lo)? < ioff_target || ioff(hi)? > ioff_target {
            return Err(CalibError::Config(format!(
                "target ioff {ioff_target:e} A not reachable"
            )));
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ioff(mid)? > ioff_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = shifted(0.5 * (lo + hi));
        let ih = self.drain_current(&c, s * vdd, s * vdd / 2.0)?.abs();
        let il = self.drain_current(&c, s * vdd / 2.0, s * vdd)?.abs();
        Ok(0.5 * (ih + il))
    }
}

/// Reference I-V and Cgg-V data at one design point.
pub fn virtual_tcad(
    params: &OracleParams,
    point: DesignPoint,
    bias: &BiasSpec,
) -> Result<(IvDataset, CggDataset), CalibError> {
    bias.validate()?;
    let card = params.trend_card(&point)?;
    let s = params.polarity.sign();
    let mut rows = Vec::new();
    for &vd in &bias.vd_values {
        for vg in bias.vg_values() {
            let (vg, vd) = (s * vg, s * vd);
            rows.push(IvRow {
                vg,
                vd,
                id: params.drain_current(&card, vg, vd)?,
            });
        }
    }
    let mut cgg = Vec::new();
    let h = 1e-4;
    for vg in bias.cgg_vg_values() {
        let q = |v: f64| {
            card.eval_terminal_charges(&BiasPoint::new(0.0, s * v, 0.0, 0.0), 1)
                .map(|q| q.qg)
        };
        cgg.push(CggRow {
            vg: s * vg,
            cgg: s * (q(vg + h)? - q(vg - h)?) / (2.0 * h),
        });
    }
    let iv = IvDataset {
        point,
        vdd: bias.vdd,
        polarity: params.polarity,
        rows,
    };
    iv.validate()?;
    Ok((
        iv,
        CggDataset {
            point,
            polarity: params.polarity,
            rows: cgg,
        },
    ))
}

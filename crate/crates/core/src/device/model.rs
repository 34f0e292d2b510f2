//! Closed-form surrogate equations.
//!
//! N-type, per fin, all voltages referenced to the bulk terminal:
//!
//! ```text
//! phit   = k T / q
//! vt_eff = vt0 - dibl * |vds|
//! vp     = (vg - vt_eff) / n_ss
//! F(x)   = ln(1 + exp(x / (2 phit)))^2
//! ispec  = 2 n_ss phit^2 k_gain weff / lg
//! core   = ispec * (F(vp - vs) - F(vp - vd))
//! vdsat  = 2 phit ln(1 + exp((vp - min(vd, vs)) / (2 phit)))
//! vde    = |vds| / (1 + (|vds| / vdsat)^4)^(1/4)
//! id     = core * (1 + lambda_clm |vds|) / (1 + theta_sat vde)
//! ```
//!
//! Series resistances are resolved exactly: the per-fin current solves
//! `i = id(vd - i rd, vg, vs + i rs)` by a bracketed root search.
//!
//! Charges:
//!
//! ```text
//! qch = cch_max n_ss phit ln(1 + exp((vg - (vd + vs)/2 - vt_eff) / (n_ss phit)))
//! qg  = cov (vgs + vgd) + qch
//! qd  = -cov vgd - qch / 2
//! qb  = 0,  qs = -(qg + qd)
//! ```

use super::{BiasPoint, ModelCard, Polarity, TerminalCharges, TerminalCurrents};

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

pub fn thermal_voltage(temp: f64) -> f64 {
    BOLTZMANN * temp / ELEMENTARY_CHARGE
}

/// ln(1 + e^x) without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Per-fin channel current of the N-type equations, no series resistance.
pub(crate) fn channel_current(card: &ModelCard, phit: f64, vd: f64, vg: f64, vs: f64) -> f64 {
    let vds = vd - vs;
    let avds = vds.abs();
    let vt_eff = card.vt0 - card.dibl * avds;
    let vp = (vg - vt_eff) / card.n_ss;
    let ispec = 2.0 * card.n_ss * phit * phit * card.k_gain * (card.weff() / card.lg);
    let two_phit = 2.0 * phit;
    let fs = softplus((vp - vs) / two_phit);
    let fd = softplus((vp - vd) / two_phit);
    let core = ispec * ((fs - fd) * (fs + fd));
    if avds == 0.0 {
        return core;
    }
    let vdsat = two_phit * softplus((vp - vd.min(vs)) / two_phit);
    let ratio = avds / vdsat;
    let vde = avds / (1.0 + ratio.powi(4)).powf(0.25);
    core * (1.0 + card.lambda_clm * avds) / (1.0 + card.theta_sat * vde)
}

/// Per-fin drain current including series resistances.
fn drain_current_per_fin(card: &ModelCard, phit: f64, vd: f64, vg: f64, vs: f64) -> f64 {
    let i0 = channel_current(card, phit, vd, vg, vs);
    if (card.rs == 0.0 && card.rd == 0.0) || i0 == 0.0 {
        return i0;
    }
    let g = |i: f64| i - channel_current(card, phit, vd - i * card.rd, vg, vs + i * card.rs);
    // g(0) = -i0; g is increasing in i, so the root lies between 0 and i0.
    let (mut lo, mut hi) = if i0 > 0.0 { (0.0, i0) } else { (i0, 0.0) };
    let (mut glo, mut ghi) = (g(lo), g(hi));
    let mut widen = 0;
    while glo > 0.0 && widen < 60 {
        lo -= (hi - lo).max(i0.abs());
        glo = g(lo);
        widen += 1;
    }
    while ghi < 0.0 && widen < 120 {
        hi += (hi - lo).max(i0.abs());
        ghi = g(hi);
        widen += 1;
    }
    if glo == 0.0 {
        return lo;
    }
    if ghi == 0.0 {
        return hi;
    }
    // Illinois false position with bisection fallback.
    let mut side = 0i8;
    for _ in 0..200 {
        let mut x = (lo * ghi - hi * glo) / (ghi - glo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = x;
            glo = gx;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            ghi = gx;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn n_currents(card: &ModelCard, b: &BiasPoint, nfin: u32) -> TerminalCurrents {
    let phit = thermal_voltage(card.temp);
    let id = drain_current_per_fin(card, phit, b.vd - b.vb, b.vg - b.vb, b.vs - b.vb) * nfin as f64;
    TerminalCurrents {
        id,
        ig: 0.0,
        is: -id,
        ib: 0.0,
    }
}

fn n_charges(card: &ModelCard, b: &BiasPoint, nfin: u32) -> TerminalCharges {
    let phit = thermal_voltage(card.temp);
    let n_phit = card.n_ss * phit;
    let vt_eff = card.vt0 - card.dibl * (b.vd - b.vs).abs();
    let qch = card.cch_max * n_phit * softplus((b.vg - 0.5 * (b.vd + b.vs) - vt_eff) / n_phit);
    let vgs = b.vg - b.vs;
    let vgd = b.vg - b.vd;
    let qg = card.cov * (vgs + vgd) + qch;
    let qd = -card.cov * vgd - 0.5 * qch;
    let qs = -(qg + qd);
    TerminalCharges {
        qd,
        qg,
        qs,
        qb: 0.0,
    }
    .scaled(nfin as f64)
}

pub(crate) fn currents(card: &ModelCard, bias: &BiasPoint, nfin: u32) -> TerminalCurrents {
    match card.polarity {
        Polarity::N => n_currents(card, bias, nfin),
        Polarity::P => n_currents(card, &bias.mirrored(), nfin).scaled(-1.0),
    }
}

pub(crate) fn charges(card: &ModelCard, bias: &BiasPoint, nfin: u32) -> TerminalCharges {
    match card.polarity {
        Polarity::N => n_charges(card, bias, nfin),
        Polarity::P => n_charges(card, &bias.mirrored(), nfin).scaled(-1.0),
    }
}

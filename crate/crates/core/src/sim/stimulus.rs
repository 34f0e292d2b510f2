//! Time-dependent source values.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StimulusError {
    #[error("pwl needs at least one (t, v) pair")]
    EmptyPwl,
    #[error("pwl times must be non-negative and strictly increasing")]
    PwlOrder,
    #[error("dexp needs tau_decay > tau_rise > 0")]
    DexpTimes,
    #[error("ramp needs t_start >= 0 and t_rise > 0")]
    RampTimes,
    #[error("stimulus values must be finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    Dc(f64),
    /// Linear interpolation, end values held.
    Pwl(Vec<(f64, f64)>),
    /// `i0 (exp(-t/tau_decay) - exp(-t/tau_rise))`.
    Dexp {
        i0: f64,
        tau_rise: f64,
        tau_decay: f64,
    },
    /// 0 before `t_start`, linear to `v_final` over `t_rise`, then held.
    Ramp {
        t_start: f64,
        t_rise: f64,
        v_final: f64,
    },
}

impl Stimulus {
    pub fn pwl(points: Vec<(f64, f64)>) -> Result<Self, StimulusError> {
        let s = Stimulus::Pwl(points);
        s.validate()?;
        Ok(s)
    }

    pub fn dexp(i0: f64, tau_rise: f64, tau_decay: f64) -> Result<Self, StimulusError> {
        let s = Stimulus::Dexp {
            i0,
            tau_rise,
            tau_decay,
        };
        s.validate()?;
        Ok(s)
    }

    /// Double exponential scaled so that its maximum equals `peak`.
    pub fn dexp_with_peak(peak: f64, tau_rise: f64, tau_decay: f64) -> Result<Self, StimulusError> {
        let unit = Stimulus::dexp(1.0, tau_rise, tau_decay)?;
        let (_, p) = unit.dexp_peak().ok_or(StimulusError::DexpTimes)?;
        Stimulus::dexp(peak / p, tau_rise, tau_decay)
    }

    pub fn ramp(t_start: f64, t_rise: f64, v_final: f64) -> Result<Self, StimulusError> {
        let s = Stimulus::Ramp {
            t_start,
            t_rise,
            v_final,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), StimulusError> {
        match self {
            Stimulus::Dc(v) => {
                if !v.is_finite() {
                    return Err(StimulusError::NonFinite);
                }
            }
            Stimulus::Pwl(p) => {
                if p.is_empty() {
                    return Err(StimulusError::EmptyPwl);
                }
                if p.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return Err(StimulusError::NonFinite);
                }
                if p[0].0 < 0.0 || p.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(StimulusError::PwlOrder);
                }
            }
            Stimulus::Dexp {
                i0,
                tau_rise,
                tau_decay,
            } => {
                if !i0.is_finite() {
                    return Err(StimulusError::NonFinite);
                }
                if !(*tau_rise > 0.0 && tau_decay > tau_rise && tau_decay.is_finite()) {
                    return Err(StimulusError::DexpTimes);
                }
            }
            Stimulus::Ramp {
                t_start,
                t_rise,
                v_final,
            } => {
                if !v_final.is_finite() {
                    return Err(StimulusError::NonFinite);
                }
                if !(*t_start >= 0.0 && *t_rise > 0.0 && t_start.is_finite() && t_rise.is_finite())
                {
                    return Err(StimulusError::RampTimes);
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Stimulus::Dc(v) => *v,
            Stimulus::Pwl(p) => {
                if t <= p[0].0 {
                    return p[0].1;
                }
                let last = p[p.len() - 1];
                if t >= last.0 {
                    return last.1;
                }
                let k = p.partition_point(|(tk, _)| *tk <= t);
                let ((t0, v0), (t1, v1)) = (p[k - 1], p[k]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
            Stimulus::Dexp {
                i0,
                tau_rise,
                tau_decay,
            } => {
                if t <= 0.0 {
                    0.0
                } else {
                    i0 * ((-t / tau_decay).exp() - (-t / tau_rise).exp())
                }
            }
            Stimulus::Ramp {
                t_start,
                t_rise,
                v_final,
            } => {
                if t <= *t_start {
                    0.0
                } else if t >= t_start + t_rise {
                    *v_final
                } else {
                    v_final * (t - t_start) / t_rise
                }
            }
        }
    }

    /// Times where the waveform's slope changes abruptly.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Stimulus::Dc(_) | Stimulus::Dexp { .. } => vec![],
            Stimulus::Pwl(p) => p.iter().map(|(t, _)| *t).filter(|t| *t > 0.0).collect(),
            Stimulus::Ramp {
                t_start, t_rise, ..
            } => [*t_start, t_start + t_rise]
                .into_iter()
                .filter(|t| *t > 0.0)
                .collect(),
        }
    }

    /// Time and value of the double-exponential maximum.
    pub fn dexp_peak(&self) -> Option<(f64, f64)> {
        match self {
            Stimulus::Dexp {
                tau_rise,
                tau_decay,
                ..
            } => {
                let (tr, td) = (*tau_rise, *tau_decay);
                let t = tr * td / (td - tr) * (td / tr).ln();
                Some((t, self.eval(t)))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Stimulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stimulus::Dc(v) => write!(f, "dc {v:e}"),
            Stimulus::Pwl(p) => {
                f.write_str("pwl")?;
                for (t, v) in p {
                    write!(f, " ({t:e} {v:e})")?;
                }
                Ok(())
            }
            Stimulus::Dexp {
                i0,
                tau_rise,
                tau_decay,
            } => write!(f, "dexp {i0:e} {tau_rise:e} {tau_decay:e}"),
            Stimulus::Ramp {
                t_start,
                t_rise,
                v_final,
            } => write!(f, "ramp {t_start:e} {t_rise:e} {v_final:e}"),
        }
    }
}

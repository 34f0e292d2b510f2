use rayon::prelude::*;

use super::simplex::{minimize, SimplexOptions};
use super::{
    relative_rms, virtual_tcad, BiasSpec, CalibError, CggDataset, IvDataset, OracleParams, RmsPair,
};
use crate::device::{thermal_voltage, BiasPoint, ModelCard};
use crate::grid::{DesignPoint, ModelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FreeParam {
    Vt0,
    NSs,
    Dibl,
    KGain,
    ThetaSat,
    LambdaClm,
    /// rs and rd together.
    SeriesR,
    /// Fitted to the Cgg data, not the I-V data.
    Cov,
    /// Fitted to the Cgg data, not the I-V data.
    CchMax,
}

impl FreeParam {
    pub const IV_DEFAULT: [FreeParam; 6] = [
        FreeParam::Vt0,
        FreeParam::NSs,
        FreeParam::Dibl,
        FreeParam::KGain,
        FreeParam::ThetaSat,
        FreeParam::LambdaClm,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name.trim().to_ascii_lowercase().as_str() {
            "vt0" => Self::Vt0,
            "n_ss" => Self::NSs,
            "dibl" => Self::Dibl,
            "k_gain" => Self::KGain,
            "theta_sat" => Self::ThetaSat,
            "lambda_clm" => Self::LambdaClm,
            "rs" | "rd" | "rs=rd" => Self::SeriesR,
            "cov" => Self::Cov,
            "cch_max" => Self::CchMax,
            _ => return None,
        })
    }

    fn is_capacitance(self) -> bool {
        matches!(self, Self::Cov | Self::CchMax)
    }

    /// Maps an unconstrained coordinate to a parameter value. `y = 0` is the
    /// initial value whenever that value is inside the parameter's domain.
    fn apply(self, init: &ModelCard, card: &mut ModelCard, y: f64) {
        let positive = |v: f64, fallback: f64| if v > 0.0 { v } else { fallback };
        match self {
            Self::Vt0 => card.vt0 = init.vt0 + 0.2 * y,
            Self::NSs => card.n_ss = 1.0 + positive(init.n_ss - 1.0, 0.02) * y.exp(),
            Self::Dibl => card.dibl = positive(init.dibl, 1e-3) * y.exp(),
            Self::KGain => card.k_gain = init.k_gain * y.exp(),
            Self::ThetaSat => card.theta_sat = positive(init.theta_sat, 0.05) * y.exp(),
            Self::LambdaClm => card.lambda_clm = positive(init.lambda_clm, 0.01) * y.exp(),
            Self::SeriesR => {
                card.rs = positive(init.rs, 10.0) * y.exp();
                card.rd = card.rs;
            }
            Self::Cov | Self::CchMax => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub free: Vec<FreeParam>,
    pub simplex: SimplexOptions,
    /// Weight of the log-scale term in the objective.
    pub log_weight: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let mut free = FreeParam::IV_DEFAULT.to_vec();
        free.extend([FreeParam::Cov, FreeParam::CchMax]);
        Self {
            free,
            simplex: SimplexOptions::default(),
            log_weight: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub card: ModelCard,
    /// Percent.
    pub rms_lin: f64,
    /// Percent of a decade.
    pub rms_log: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after each simplex iteration.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub const CSV_HEADER: &'static str =
        "node,lg_nm,wfin_nm,rms_lin_pct,rms_log_pct_dec,iterations,evaluations,converged";

    pub fn csv_row(&self, node: usize) -> String {
        format!(
            "{node},{},{},{:.6},{:.6},{},{},{}",
            self.card.lg,
            self.card.wfin,
            self.rms_lin,
            self.rms_log,
            self.iterations,
            self.evaluations,
            self.converged
        )
    }
}

fn simulate(card: &ModelCard, data: &IvDataset) -> Vec<f64> {
    data.rows
        .iter()
        .map(|r| {
            card.eval_terminal_currents(&BiasPoint::new(r.vd, r.vg, 0.0, 0.0), 1)
                .map(|c| c.id)
                .unwrap_or(f64::NAN)
        })
        .collect()
}

/// Linear least squares of `Cgg = 2 cov + cch_max * s(vg)`, with `s` the
/// normalized channel-capacitance shape of `card`.
fn fit_capacitances(card: &ModelCard, cgg: &CggDataset, free: &[FreeParam]) -> (f64, f64) {
    let nphit = card.n_ss * thermal_voltage(card.temp);
    let sign = card.polarity.sign();
    let shape: Vec<f64> = cgg
        .rows
        .iter()
        .map(|r| 1.0 / (1.0 + (-(sign * r.vg - card.vt0) / nphit).exp()))
        .collect();
    let fit_cov = free.contains(&FreeParam::Cov);
    let fit_cch = free.contains(&FreeParam::CchMax);
    let y: Vec<f64> = cgg.rows.iter().map(|r| r.cgg).collect();
    let n = y.len() as f64;
    let (mut a, mut b) = (2.0 * card.cov, card.cch_max);
    match (fit_cov, fit_cch) {
        (true, true) => {
            let (ss, s, sy, yy) = (
                shape.iter().map(|s| s * s).sum::<f64>(),
                shape.iter().sum::<f64>(),
                shape.iter().zip(&y).map(|(s, y)| s * y).sum::<f64>(),
                y.iter().sum::<f64>(),
            );
            let det = n * ss - s * s;
            if det.abs() > 0.0 {
                b = (n * sy - s * yy) / det;
                a = (yy - b * s) / n;
            }
        }
        (true, false) => a = y.iter().zip(&shape).map(|(y, s)| y - b * s).sum::<f64>() / n,
        (false, true) => {
            let ss = shape.iter().map(|s| s * s).sum::<f64>();
            if ss > 0.0 {
                b = shape.iter().zip(&y).map(|(s, y)| s * (y - a)).sum::<f64>() / ss;
            }
        }
        (false, false) => {}
    }
    ((0.5 * a).max(0.0), b.max(0.0))
}

/// Fits the free parameters of `init` to `data` (and `cgg`, if given).
pub fn extract_card(
    data: &IvDataset,
    cgg: Option<&CggDataset>,
    init: &ModelCard,
    config: &FitConfig,
) -> Result<FitResult, CalibError> {
    data.validate()?;
    init.validate()?;
    let iv_free: Vec<FreeParam> = config
        .free
        .iter()
        .copied()
        .filter(|p| !p.is_capacitance())
        .collect();
    let card_for = |y: &[f64]| {
        let mut c = init.clone();
        for (p, v) in iv_free.iter().zip(y) {
            p.apply(init, &mut c, *v);
        }
        c
    };
    let objective = |y: &[f64]| {
        let c = card_for(y);
        if c.validate().is_err() {
            return f64::INFINITY;
        }
        match relative_rms(&simulate(&c, data), data) {
            Ok(r) => r.lin + config.log_weight * r.log,
            Err(_) => f64::INFINITY,
        }
    };
    let run = minimize(objective, &vec![0.0; iv_free.len()], &config.simplex);
    let mut card = card_for(&run.x);
    if let Some(cgg) = cgg {
        let (cov, cch) = fit_capacitances(&card, cgg, &config.free);
        card.cov = cov;
        card.cch_max = cch;
    }
    let RmsPair { lin, log } = relative_rms(&simulate(&card, data), data)?;
    Ok(FitResult {
        card,
        rms_lin: lin,
        rms_log: log,
        iterations: run.iterations,
        evaluations: run.evaluations,
        converged: run.converged,
        trace: run.trace,
    })
}

/// Reference data for one lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeReference {
    pub iv: IvDataset,
    pub cgg: Option<CggDataset>,
}

impl NodeReference {
    /// Oracle data for every node of the lattice, row-major.
    pub fn from_oracle(
        params: &OracleParams,
        axis1: &[f64],
        axis2: &[f64],
        bias: &BiasSpec,
    ) -> Result<Vec<NodeReference>, CalibError> {
        let mut out = Vec::with_capacity(axis1.len() * axis2.len());
        for &a in axis1 {
            for &b in axis2 {
                let (iv, cgg) = virtual_tcad(params, DesignPoint::new(a, b), bias)?;
                out.push(NodeReference { iv, cgg: Some(cgg) });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct GridCalibration {
    pub grid: ModelGrid,
    pub fits: Vec<FitResult>,
}

impl GridCalibration {
    pub fn fit_csv(&self) -> String {
        let mut out = format!("{}\n", FitResult::CSV_HEADER);
        for (i, f) in self.fits.iter().enumerate() {
            out.push_str(&f.csv_row(i));
            out.push('\n');
        }
        out
    }
}

/// One extraction per node, fanned out on the current rayon pool. `template`
/// supplies the starting parameters; its geometry and polarity are replaced
/// by each node's.
pub fn calibrate_grid(
    labels: [&str; 2],
    axis1: &[f64],
    axis2: &[f64],
    references: &[NodeReference],
    template: &ModelCard,
    config: &FitConfig,
) -> Result<GridCalibration, CalibError> {
    let expected = axis1.len() * axis2.len();
    if references.len() != expected {
        return Err(CalibError::InvalidDataset(format!(
            "expected {expected} node datasets, got {}",
            references.len()
        )));
    }
    let fits: Vec<FitResult> = references
        .par_iter()
        .enumerate()
        .map(|(idx, r)| {
            let (lg, wfin) = (axis1[idx / axis2.len()], axis2[idx % axis2.len()]);
            let init = ModelCard {
                lg,
                wfin,
                polarity: r.iv.polarity,
                ..template.clone()
            };
            extract_card(&r.iv, r.cgg.as_ref(), &init, config)
        })
        .collect::<Result<_, _>>()?;
    let cards = fits.iter().map(|f| f.card.clone()).collect();
    let grid = ModelGrid::new(labels, axis1.to_vec(), axis2.to_vec(), cards)?;
    Ok(GridCalibration { grid, fits })
}

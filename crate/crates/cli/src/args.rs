use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "GCM_OUT_DIR";
pub const DEFAULT_OUT: &str = "gcm_out";
pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Parser)]
#[command(
    name = "gcm",
    version,
    about = "General compact model toolkit: calibration, circuit simulation, ESD clamp studies"
)]
pub struct Cli {
    /// Output directory [default: $GCM_OUT_DIR, else ./gcm_out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps, Monte Carlo and calibration
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Progress messages on stderr
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a model grid from oracle or CSV reference data
    Calibrate(CalibrateArgs),
    /// Device figures of merit for a card or a general-model point
    Characterize(CharacterizeArgs),
    /// ESD clamp metrics at one design point
    Clamp(ClampArgs),
    /// Clamp metrics over an (Lg, Wfin) grid of design points
    Sweep(SweepArgs),
    /// Monte Carlo over Gaussian Lg and Wfin fluctuations
    Mc(McArgs),
    /// Model discontinuity across cell edges of a grid
    SeamCheck(SeamArgs),
    /// Run a netlist and write its waveforms
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// `defaults`, `defaults-p`, or an oracle config file
    #[arg(long, conflicts_with = "refs")]
    pub oracle: Option<String>,
    /// Directory of `iv_<lg>_<wfin>.csv` (and optional `cgg_<lg>_<wfin>.csv`) reference files
    #[arg(long)]
    pub refs: Option<PathBuf>,
    /// Lg axis, nm: `start:stop:step` or a comma list
    #[arg(long)]
    pub lg: String,
    /// Wfin axis, nm: `start:stop:step` or a comma list
    #[arg(long)]
    pub wfin: String,
    /// Supply of the reference sweeps, V
    #[arg(long, default_value_t = 0.75)]
    pub vdd: f64,
    /// Grid name; the manifest is written as <out>/<name>
    #[arg(long, default_value = "gcm")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    /// Model card file
    #[arg(long, conflicts_with_all = ["grid", "point"])]
    pub card: Option<PathBuf>,
    /// Grid manifest
    #[arg(long, requires = "point")]
    pub grid: Option<PathBuf>,
    /// Design point `lg,wfin` in nm
    #[arg(long)]
    pub point: Option<String>,
    #[arg(long, default_value_t = 0.75)]
    pub vdd: f64,
    #[arg(long, default_value_t = 1)]
    pub nfin: u32,
}

#[derive(Debug, Args, Clone)]
pub struct ClampModelArgs {
    /// Clamp config file (key = value)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// N grid manifest [default: calibrate from the default oracle]
    #[arg(long, requires = "grid_p")]
    pub grid_n: Option<PathBuf>,
    /// P grid manifest
    #[arg(long, requires = "grid_n")]
    pub grid_p: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClampArgs {
    #[command(flatten)]
    pub models: ClampModelArgs,
    /// Design point `lg,wfin` in nm [default: the config's point]
    #[arg(long)]
    pub point: Option<String>,
    /// `all`, `clamp_voltage`, `leakage`, `peak_powerup_current` or `recovery_time`
    #[arg(long, default_value = "all")]
    pub metric: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub models: ClampModelArgs,
    #[arg(long, default_value = "14.5:18.5:1.0")]
    pub lg: String,
    #[arg(long, default_value = "4.1:7.1:1.0")]
    pub wfin: String,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub models: ClampModelArgs,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Lg standard deviation, nm [default: from config]
    #[arg(long)]
    pub sigma_lg: Option<f64>,
    /// Wfin standard deviation, nm [default: from config]
    #[arg(long)]
    pub sigma_wfin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SeamArgs {
    /// Grid manifest
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    pub vdd: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Netlist file
    pub netlist: PathBuf,
    /// Register a grid under a model name: `name=manifest`
    #[arg(long = "grid")]
    pub grids: Vec<String>,
}

/// Parses `start:stop:step` (stop included when it lands on the lattice
/// within 1e-9), a comma list, or a single value.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| -> Result<f64, String> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("`{s}` is not a number in `{text}`"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{s}` is not finite"))
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if h <= 0.0 {
                return Err(format!("range step must be positive in `{text}`"));
            }
            if b < a {
                return Err(format!("range stop is below start in `{text}`"));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize;
            if count > 100_000 {
                return Err(format!("range `{text}` has too many points"));
            }
            // Snapping to 1e-9 keeps 4.1 + 3 * 1.0 equal to the literal 7.1.
            Ok((0..=count).map(|i| snap(a + i as f64 * h)).collect())
        }
        [single] => single.split(',').map(num).collect(),
        _ => Err(format!(
            "expected `start:stop:step` or a comma list, got `{text}`"
        )),
    }
}

fn snap(v: f64) -> f64 {
    format!("{v:.9}").parse().expect("formatted float parses")
}

/// Parses `lg,wfin` in nm.
pub fn parse_point(text: &str) -> Result<(f64, f64), String> {
    let v: Vec<&str> = text.split(',').collect();
    let [a, b] = v.as_slice() else {
        return Err(format!("expected `lg,wfin` in nm, got `{text}`"));
    };
    let parse = |s: &str| {
        s.trim()
            .trim_end_matches(['n', 'N'])
            .parse::<f64>()
            .map_err(|_| format!("bad coordinate `{s}`"))
    };
    Ok((parse(a)?, parse(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_inclusive_stop() {
        assert_eq!(
            parse_range("14.5:18.5:1.0").unwrap(),
            vec![14.5, 15.5, 16.5, 17.5, 18.5]
        );
        assert_eq!(
            parse_range("4.1:7.1:1.0").unwrap(),
            vec![4.1, 5.1, 6.1, 7.1]
        );
        assert_eq!(parse_range("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_range("0:1:0.3").unwrap(), vec![0.0, 0.3, 0.6, 0.9]);
    }

    #[test]
    fn range_lists_and_errors() {
        assert_eq!(parse_range("18").unwrap(), vec![18.0]);
        assert_eq!(parse_range("17.8, 18.2").unwrap(), vec![17.8, 18.2]);
        for bad in ["1:2", "1:0:1", "1:2:0", "a:2:1", "1:2:3:4", "nan"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn point_syntax() {
        assert_eq!(parse_point("17.8,6.3").unwrap(), (17.8, 6.3));
        assert_eq!(parse_point("17.8n, 6.3n").unwrap(), (17.8, 6.3));
        assert!(parse_point("17.8").is_err());
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use gcm_core::calibration::{
    calibrate_grid, read_cgg_csv, read_iv_csv, write_fit_csv, BiasSpec, FitConfig, NodeReference,
    OracleParams,
};
use gcm_core::clamp::{
    correlation_csv, correlation_matrix, measure, measure_all, monte_carlo, run_sweep, ClampConfig,
    ClampError, ClampModels, Metric, MetricsReport,
};
use gcm_core::device::{
    characterize, read_card, write_card, CharOptions, CharReport, ModelCard, Polarity,
};
use gcm_core::digest::config_digest;
use gcm_core::grid::{locate_and_weigh, read_grid, seam_gap, write_grid, DesignPoint, ModelGrid};
use gcm_core::sim::{parse_netlist, Analysis, Circuit, ModelLibrary, SimError, SimOptions};
use gcm_core::{BiasPoint, TerminalModel};

use crate::args::{
    parse_point, parse_range, CalibrateArgs, CharacterizeArgs, ClampArgs, ClampModelArgs, Cli,
    Command, McArgs, SeamArgs, SimulateArgs, SweepArgs, DEFAULT_OUT, OUT_ENV,
};
use crate::Failure;

struct Ctx {
    out: PathBuf,
    verbose: bool,
    outputs: Vec<String>,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn write(&mut self, name: &str, body: &str) -> anyhow::Result<()> {
        let path = self.out.join(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        self.note(format!("wrote {}", path.display()));
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// `run_manifest.txt`: what ran, the digest of its normalized settings, the seed.
    fn finish(
        &mut self,
        subcommand: &str,
        settings: &str,
        seed: Option<u64>,
    ) -> anyhow::Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "subcommand = {subcommand}");
        let _ = writeln!(text, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "config_digest = {}", config_digest(settings));
        let _ = writeln!(
            text,
            "seed = {}",
            seed.map_or_else(|| "none".to_string(), |s| s.to_string())
        );
        let _ = writeln!(text, "outputs = {}", self.outputs.join(" "));
        text.push_str("# settings\n");
        for line in settings.lines() {
            let _ = writeln!(text, "# {line}");
        }
        let path = self.out.join("run_manifest.txt");
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

fn solver(e: ClampError) -> Failure {
    if e.is_solver_failure() {
        Failure::Solver(e.into())
    } else {
        Failure::Validation(e.into())
    }
}

fn sim_failure(e: SimError) -> Failure {
    if e.is_solver_failure() {
        Failure::Solver(e.into())
    } else {
        Failure::Validation(e.into())
    }
}

fn existing(path: &Path, what: &str) -> anyhow::Result<()> {
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

fn point(text: &str) -> anyhow::Result<DesignPoint> {
    let (a, b) = parse_point(text).map_err(|e| anyhow!(e))?;
    let p = DesignPoint::new(a, b);
    p.validate()?;
    Ok(p)
}

fn range(text: &str, flag: &str) -> anyhow::Result<Vec<f64>> {
    parse_range(text).map_err(|e| anyhow!("--{flag}: {e}"))
}

fn load_grid(path: &Path) -> anyhow::Result<ModelGrid> {
    existing(path, "grid manifest")?;
    Ok(read_grid(path)?)
}

/// Stable fingerprint of a grid's axes and cards.
fn grid_fingerprint(grid: &ModelGrid) -> String {
    let mut text = format!("{:?} {:?}\n", grid.axis1(), grid.axis2());
    for c in grid.cards() {
        text.push_str(&write_card(c));
    }
    config_digest(&text)
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(anyhow!("--jobs must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    let out = cli
        .out
        .or_else(|| {
            std::env::var_os(OUT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let mut ctx = Ctx {
        out,
        verbose: cli.verbose,
        outputs: Vec::new(),
    };
    match cli.command {
        Command::Calibrate(a) => calibrate(&mut ctx, a),
        Command::Characterize(a) => characterize_cmd(&mut ctx, a),
        Command::Clamp(a) => clamp(&mut ctx, a),
        Command::Sweep(a) => sweep(&mut ctx, a),
        Command::Mc(a) => mc(&mut ctx, a),
        Command::SeamCheck(a) => seam(&mut ctx, a),
        Command::Simulate(a) => simulate(&mut ctx, a),
    }
}

fn calibrate(ctx: &mut Ctx, a: CalibrateArgs) -> Result<(), Failure> {
    let lg = range(&a.lg, "lg")?;
    let wfin = range(&a.wfin, "wfin")?;
    if a.name.is_empty() || a.name.contains(['/', '\\']) {
        return Err(anyhow!("--name must be a plain file name").into());
    }
    let bias = BiasSpec {
        vdd: a.vdd,
        ..BiasSpec::default()
    };
    bias.validate()?;
    let mut settings = format!(
        "lg = {lg:?}\nwfin = {wfin:?}\nvdd = {}\nname = {}\n",
        a.vdd, a.name
    );
    let (refs, polarity) = match (&a.oracle, &a.refs) {
        (Some(src), None) => {
            let params = match src.as_str() {
                "defaults" | "defaults-n" => OracleParams::defaults(Polarity::N),
                "defaults-p" => OracleParams::defaults(Polarity::P),
                path => {
                    let p = Path::new(path);
                    existing(p, "oracle config")?;
                    let text =
                        fs::read_to_string(p).with_context(|| format!("cannot read {path}"))?;
                    let _ = writeln!(settings, "oracle_digest = {}", config_digest(&text));
                    OracleParams::parse(&text).with_context(|| format!("oracle config {path}"))?
                }
            };
            let _ = writeln!(settings, "oracle = {src}");
            ctx.note(format!(
                "generating oracle data for {} nodes",
                lg.len() * wfin.len()
            ));
            (
                NodeReference::from_oracle(&params, &lg, &wfin, &bias)?,
                params.polarity,
            )
        }
        (None, Some(dir)) => {
            existing(dir, "reference directory")?;
            let mut refs = Vec::new();
            for &l in &lg {
                for &w in &wfin {
                    let p = DesignPoint::new(l, w);
                    let iv_path = dir.join(format!("iv_{l}_{w}.csv"));
                    existing(&iv_path, "reference file")?;
                    let iv = read_iv_csv(&iv_path, p, a.vdd)?;
                    let cgg_path = dir.join(format!("cgg_{l}_{w}.csv"));
                    let cgg = if cgg_path.exists() {
                        Some(read_cgg_csv(&cgg_path, p, iv.polarity)?)
                    } else {
                        None
                    };
                    let _ = writeln!(
                        settings,
                        "ref {l} {w} = {}",
                        config_digest(&fs::read_to_string(&iv_path).unwrap_or_default())
                    );
                    refs.push(NodeReference { iv, cgg });
                }
            }
            let pol = refs[0].iv.polarity;
            (refs, pol)
        }
        _ => return Err(anyhow!("give exactly one of --oracle or --refs").into()),
    };
    let template = ModelCard {
        polarity,
        ..ModelCard::reference()
    };
    ctx.note("fitting node cards");
    let cal = calibrate_grid(
        ["lg", "wfin"],
        &lg,
        &wfin,
        &refs,
        &template,
        &FitConfig::default(),
    )?;
    let manifest = write_grid(&cal.grid, &ctx.out, &a.name)?;
    ctx.outputs.push(a.name.clone());
    ctx.note(format!("wrote {}", manifest.display()));
    let fit_name = format!("{}_fit.csv", a.name);
    write_fit_csv(&ctx.out.join(&fit_name), &cal)?;
    ctx.outputs.push(fit_name);
    ctx.finish("calibrate", &settings, None)?;
    Ok(())
}

fn characterize_cmd(ctx: &mut Ctx, a: CharacterizeArgs) -> Result<(), Failure> {
    let opts = CharOptions {
        nfin: a.nfin.max(1),
        ..CharOptions::default()
    };
    let (model, settings): (Arc<dyn TerminalModel>, String) = match (&a.card, &a.grid, &a.point) {
        (Some(card), None, None) => {
            existing(card, "card file")?;
            let c = read_card(card)?;
            let text = write_card(&c);
            (Arc::new(c), text)
        }
        (None, Some(grid), Some(p)) => {
            let g = Arc::new(load_grid(grid)?);
            let q = point(p)?;
            let s = format!(
                "grid = {}\npoint = {},{}\n",
                grid_fingerprint(&g),
                q.axis1,
                q.axis2
            );
            (Arc::new(locate_and_weigh(&g, q)?), s)
        }
        _ => return Err(anyhow!("give --card, or --grid with --point").into()),
    };
    let report: CharReport = characterize(model.as_ref(), a.vdd, &opts)?;
    let body = format!("{}\n{}\n", CharReport::CSV_HEADER, report.csv_row());
    ctx.write("characterize.csv", &body)?;
    ctx.finish(
        "characterize",
        &format!("{settings}vdd = {}\nnfin = {}\n", a.vdd, opts.nfin),
        None,
    )?;
    Ok(())
}

/// Clamp config plus the N and P grids, and the settings text describing them.
fn clamp_setup(
    ctx: &Ctx,
    m: &ClampModelArgs,
) -> Result<(ClampConfig, ClampModels, String), Failure> {
    let cfg = match &m.config {
        Some(p) => {
            existing(p, "clamp config")?;
            let text =
                fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            ClampConfig::parse(&text).with_context(|| format!("clamp config {}", p.display()))?
        }
        None => ClampConfig::default(),
    };
    let models = match (&m.grid_n, &m.grid_p) {
        (Some(n), Some(p)) => ClampModels::new(Arc::new(load_grid(n)?), Arc::new(load_grid(p)?))?,
        _ => {
            ctx.note("calibrating N and P grids from the default oracle");
            ClampModels::from_default_oracle()?.0
        }
    };
    let settings = format!(
        "{}grid_n = {}\ngrid_p = {}\n",
        cfg.to_text(),
        grid_fingerprint(&models.n),
        grid_fingerprint(&models.p)
    );
    Ok((cfg, models, settings))
}

fn clamp(ctx: &mut Ctx, a: ClampArgs) -> Result<(), Failure> {
    let (mut cfg, models, mut settings) = clamp_setup(ctx, &a.models)?;
    if let Some(p) = &a.point {
        cfg = cfg.with_point(point(p)?);
    }
    models.check(&cfg.point).map_err(solver)?;
    let _ = writeln!(
        settings,
        "point = {},{}\nmetric = {}",
        cfg.point.axis1, cfg.point.axis2, a.metric
    );
    if a.metric.eq_ignore_ascii_case("all") {
        let r = measure_all(&cfg, &models).map_err(solver)?;
        ctx.write(
            "clamp_metrics.csv",
            &format!("{}\n{}\n", MetricsReport::CSV_HEADER, r.csv_row()),
        )?;
    } else {
        let m = Metric::parse(&a.metric).ok_or_else(|| {
            anyhow!("unknown metric `{}`; use all, clamp_voltage, leakage, peak_powerup_current or recovery_time", a.metric)
        })?;
        let v = measure(&cfg, &models, m).map_err(solver)?;
        let body = format!(
            "lg_nm,wfin_nm,metric,value,config_digest\n{},{},{},{:e},{}\n",
            cfg.point.axis1,
            cfg.point.axis2,
            m,
            v,
            cfg.digest()
        );
        ctx.write("clamp_metrics.csv", &body)?;
    }
    ctx.finish("clamp", &settings, None)?;
    Ok(())
}

fn sweep(ctx: &mut Ctx, a: SweepArgs) -> Result<(), Failure> {
    let lg = range(&a.lg, "lg")?;
    let wfin = range(&a.wfin, "wfin")?;
    let (cfg, models, mut settings) = clamp_setup(ctx, &a.models)?;
    let _ = writeln!(settings, "sweep_lg = {lg:?}\nsweep_wfin = {wfin:?}");
    ctx.note(format!("sweeping {} points", lg.len() * wfin.len()));
    let s = run_sweep(&cfg, &models, &lg, &wfin).map_err(solver)?;
    for skip in &s.skipped {
        eprintln!(
            "gcm: skipped ({}, {}): {}",
            skip.point.axis1, skip.point.axis2, skip.reason
        );
    }
    ctx.write("sweep.csv", &s.to_csv())?;
    ctx.write("sweep_best.csv", &s.best_csv())?;
    if s.reports.len() >= 3 {
        let m = correlation_matrix(&s.reports).map_err(solver)?;
        ctx.write("correlation.csv", &correlation_csv(&m))?;
    } else {
        eprintln!("gcm: fewer than 3 points simulated; correlation matrix not written");
    }
    ctx.finish("sweep", &settings, None)?;
    Ok(())
}

fn mc(ctx: &mut Ctx, a: McArgs) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(
            anyhow!("--n must be at least 1 (monte carlo needs at least one sample)").into(),
        );
    }
    let (cfg, models, mut settings) = clamp_setup(ctx, &a.models)?;
    let sl = a.sigma_lg.unwrap_or(cfg.sigma_lg);
    let sw = a.sigma_wfin.unwrap_or(cfg.sigma_wfin);
    let _ = writeln!(settings, "n = {}\nsigma_lg = {sl}\nsigma_wfin = {sw}", a.n);
    ctx.note(format!("running {} samples", a.n));
    let r = monte_carlo(&cfg, &models, a.n, sl, sw, a.seed).map_err(solver)?;
    ctx.write("mc.csv", &r.to_csv())?;
    if r.clip_count > 0 {
        eprintln!(
            "gcm: {} of {} draws were clipped to the grid hull",
            r.clip_count, a.n
        );
    }
    ctx.finish("mc", &settings, Some(a.seed))?;
    Ok(())
}

fn seam(ctx: &mut Ctx, a: SeamArgs) -> Result<(), Failure> {
    if !(a.vdd.is_finite() && a.vdd > 0.0) {
        return Err(anyhow!("--vdd must be positive").into());
    }
    let g = Arc::new(load_grid(&a.grid)?);
    let sign = g.polarity().sign();
    let mut bias = Vec::new();
    for k in 0..=10 {
        let vg = sign * a.vdd * k as f64 / 10.0;
        for vd in [0.05, a.vdd] {
            bias.push(BiasPoint::new(sign * vd, vg, 0.0, 0.0));
        }
    }
    let report = seam_gap(&g, &bias)?;
    ctx.write("seam.csv", &report.to_csv())?;
    ctx.note(format!("largest relative gap {:e}", report.max_gap()));
    ctx.finish(
        "seam-check",
        &format!("grid = {}\nvdd = {}\n", grid_fingerprint(&g), a.vdd),
        None,
    )?;
    Ok(())
}

fn simulate(ctx: &mut Ctx, a: SimulateArgs) -> Result<(), Failure> {
    existing(&a.netlist, "netlist")?;
    let text = fs::read_to_string(&a.netlist)
        .with_context(|| format!("cannot read {}", a.netlist.display()))?;
    let net = parse_netlist(&text).with_context(|| a.netlist.display().to_string())?;
    if net.analyses.is_empty() {
        return Err(anyhow!("netlist has no .op or .tran analysis").into());
    }
    let base = a
        .netlist
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut lib = ModelLibrary::new().with_base_dir(&base);
    let mut settings = format!("netlist = {}\n", config_digest(&text));
    for spec in &a.grids {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--grid expects `name=manifest`, got `{spec}`"))?;
        let g = load_grid(Path::new(path))?;
        let _ = writeln!(settings, "grid {name} = {}", grid_fingerprint(&g));
        lib.add_grid(&name.to_ascii_lowercase(), Arc::new(g));
    }
    let ckt = Circuit::new(&net, &lib).map_err(sim_failure)?;
    let (mut n_op, mut n_tran) = (0, 0);
    for analysis in &net.analyses {
        let opts = SimOptions::default().with_analysis(analysis, &net);
        match analysis {
            Analysis::Op => {
                n_op += 1;
                let dc = ckt.solve_dc(&opts).map_err(sim_failure)?;
                let mut body = String::from("quantity,value\n");
                for (i, n) in dc.node_names.iter().enumerate() {
                    let _ = writeln!(body, "v({n}),{:e}", dc.x[i]);
                }
                for (i, b) in dc.branch_names.iter().enumerate() {
                    let _ = writeln!(body, "i({b}),{:e}", dc.x[dc.node_names.len() + i]);
                }
                let name = if n_op == 1 {
                    "op.csv".to_string()
                } else {
                    format!("op_{n_op}.csv")
                };
                ctx.write(&name, &body)?;
            }
            Analysis::Tran { t_stop, .. } => {
                n_tran += 1;
                let r = ckt.solve_transient(*t_stop, &opts).map_err(sim_failure)?;
                ctx.note(format!(
                    "{} accepted, {} rejected steps",
                    r.stats.accepted_steps, r.stats.rejected_steps
                ));
                let name = if n_tran == 1 {
                    "tran.csv".to_string()
                } else {
                    format!("tran_{n_tran}.csv")
                };
                ctx.write(&name, &r.to_csv())?;
            }
        }
    }
    ctx.finish("simulate", &settings, None)?;
    Ok(())
}

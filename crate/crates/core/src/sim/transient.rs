//! Adaptive transient analysis.

use std::fmt::Write as _;

use super::circuit::{Circuit, Companion, Drive, NewtonFail};
use super::netlist::GROUND;
use super::{SimError, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolverStats {
    pub dc_iterations: usize,
    pub newton_iterations: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientResult {
    pub node_names: Vec<String>,
    pub branch_names: Vec<String>,
    /// Strictly increasing from 0 to t_stop.
    pub times: Vec<f64>,
    /// Node voltages followed by voltage-source branch currents, per time point.
    pub states: Vec<Vec<f64>>,
    /// Largest node KCL residual at each point, A.
    pub kcl_residuals: Vec<f64>,
    /// The t = 0 point was imposed from initial conditions rather than solved.
    pub imposed_start: bool,
    pub stats: SolverStats,
}

impl TransientResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn column(&self, node: &str) -> Option<usize> {
        self.node_names.iter().position(|n| n == node)
    }

    pub fn voltage(&self, node: &str) -> Option<Vec<f64>> {
        if node == GROUND {
            return Some(vec![0.0; self.len()]);
        }
        let c = self.column(node)?;
        Some(self.states.iter().map(|x| x[c]).collect())
    }

    /// Current from the source's positive terminal into the source.
    pub fn branch_current(&self, source: &str) -> Option<Vec<f64>> {
        let s = source.to_ascii_lowercase();
        let c = self.node_names.len() + self.branch_names.iter().position(|n| *n == s)?;
        Some(self.states.iter().map(|x| x[c]).collect())
    }

    /// Linear interpolation of a node voltage, clamped to the simulated window.
    pub fn voltage_at(&self, node: &str, t: f64) -> Option<f64> {
        if node == GROUND {
            return Some(0.0);
        }
        let c = self.column(node)?;
        Some(interpolate(&self.times, |i| self.states[i][c], t))
    }

    /// `t,<node>...,i(<source>)...` with one row per accepted point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.node_names {
            out.push(',');
            out.push_str(n);
        }
        for b in &self.branch_names {
            let _ = write!(out, ",i({b})");
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:e}");
            for v in x {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn interpolate(times: &[f64], value: impl Fn(usize) -> f64, t: f64) -> f64 {
    if t <= times[0] {
        return value(0);
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return value(last);
    }
    let k = times.partition_point(|&tk| tk <= t);
    let (t0, t1) = (times[k - 1], times[k]);
    let (v0, v1) = (value(k - 1), value(k));
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Highest-order divided difference of `vals` over `ts`.
fn divided_difference(ts: &[f64], vals: &[f64]) -> f64 {
    let mut d = vals.to_vec();
    let n = ts.len();
    for order in 1..n {
        for i in 0..n - order {
            d[i] = (d[i + 1] - d[i]) / (ts[i + order] - ts[i]);
        }
    }
    d[0]
}

/// Largest ratio of estimated truncation error to tolerance, or None while
/// there is not yet enough history for an estimate.
fn lte_ratio(
    history: &[(f64, Vec<f64>)],
    t_new: f64,
    v_new: &[f64],
    trapezoidal: bool,
    opts: &SimOptions,
) -> Option<f64> {
    let m = history.len() + 1;
    if m < 3 {
        return None;
    }
    let h = t_new - history[history.len() - 1].0;
    let use_third = trapezoidal && m >= 4;
    let take = if use_third { 4 } else { 3 };
    let pts = &history[history.len() - (take - 1)..];
    let mut ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    ts.push(t_new);
    let v_old = &history[history.len() - 1].1;
    let mut worst: f64 = 0.0;
    let mut vals = vec![0.0; take];
    for k in 0..v_new.len() {
        for (slot, p) in vals.iter_mut().zip(pts) {
            *slot = p.1[k];
        }
        vals[take - 1] = v_new[k];
        let dd = divided_difference(&ts, &vals).abs();
        // Trapezoidal: h^3/12 x''' with x''' = 6 dd3. Backward Euler: h^2/2 x'' with x'' = 2 dd2.
        let lte = if use_third {
            0.5 * h.powi(3) * dd
        } else {
            h * h * dd
        };
        let tol = opts.reltol * v_new[k].abs().max(v_old[k].abs()) + opts.abstol;
        worst = worst.max(lte / tol);
    }
    Some(worst)
}

impl Circuit {
    pub fn solve_transient(
        &self,
        t_stop: f64,
        opts: &SimOptions,
    ) -> Result<TransientResult, SimError> {
        opts.validate()?;
        if !(t_stop.is_finite() && t_stop > 0.0) {
            return Err(SimError::Options("stop time must be positive".into()));
        }
        let nn = self.node_names().len();
        let max_step = opts.max_step.unwrap_or(t_stop / 100.0).min(t_stop);
        let first_step = opts
            .first_step
            .unwrap_or(t_stop * 1e-6)
            .max(opts.min_step)
            .min(max_step);
        let mut stats = SolverStats::default();

        let (mut x, residual0) = if opts.uic {
            let mut x = vec![0.0; self.dimension()];
            for (node, v) in &opts.initial_conditions {
                let i = self
                    .node_index(node)
                    .ok_or_else(|| SimError::UnknownNode(node.clone()))?;
                x[i] = *v;
            }
            (x, f64::NAN)
        } else {
            let dc = self.solve_dc_at(0.0, opts)?;
            stats.dc_iterations = dc.iterations;
            (dc.x, dc.residual)
        };
        let drive0 = Drive {
            t: 0.0,
            scale: 1.0,
            gmin: opts.gmin,
        };
        let mut q: Vec<f64> = self
            .assemble(&x, drive0, opts)
            .map_err(|e| self.step_error(e, 0.0))?
            .q
            .iter()
            .copied()
            .collect();
        let mut iq = vec![0.0; nn];

        let mut bps: Vec<f64> = self
            .breakpoints()
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < t_stop)
            .collect();
        bps.push(t_stop);

        let mut times = vec![0.0];
        let mut states = vec![x.clone()];
        let mut residuals = vec![residual0];
        let mut history: Vec<(f64, Vec<f64>)> = vec![(0.0, x[..nn].to_vec())];
        let mut since_reset = 0usize;
        let mut t = 0.0;
        let mut h = first_step;
        let mut bp_idx = 0;

        while t < t_stop {
            while bps[bp_idx] <= t {
                bp_idx += 1;
            }
            let next_bp = bps[bp_idx];
            let to_bp = next_bp - t;
            let mut h_try = h.min(max_step);
            if h_try >= to_bp || to_bp - h_try < 0.01 * h_try {
                h_try = to_bp;
            }
            let lands = h_try == to_bp;
            let t_new = if lands { next_bp } else { t + h_try };
            let trapezoidal = since_reset > 0;
            let (a0, a1) = if trapezoidal {
                (2.0 / h_try, -1.0)
            } else {
                (1.0 / h_try, 0.0)
            };
            let companion = Companion {
                a0,
                a1,
                q_prev: &q,
                iq_prev: &iq,
            };
            let drive = Drive {
                t: t_new,
                scale: 1.0,
                gmin: opts.gmin,
            };

            let reject = |h: &mut f64, stats: &mut SolverStats| -> Result<(), SimError> {
                stats.rejected_steps += 1;
                *h = h_try * 0.5;
                if *h < opts.min_step {
                    return Err(SimError::StepTooSmall {
                        t,
                        min_step: opts.min_step,
                    });
                }
                Ok(())
            };

            let solved =
                match self.newton(&x, drive, Some(companion), opts.max_tran_iterations, opts) {
                    Ok(s) => s,
                    Err(e) => {
                        stats.newton_iterations += e.iterations();
                        reject(&mut h, &mut stats)?;
                        continue;
                    }
                };
            stats.newton_iterations += solved.iterations;
            let ratio = lte_ratio(&history, t_new, &solved.x[..nn], trapezoidal, opts);
            if ratio.is_some_and(|r| r > 1.0) {
                reject(&mut h, &mut stats)?;
                continue;
            }

            for k in 0..nn {
                iq[k] = a0 * (solved.q[k] - q[k]) + a1 * iq[k];
            }
            q = solved.q;
            x = solved.x;
            t = t_new;
            stats.accepted_steps += 1;
            times.push(t);
            states.push(x.clone());
            residuals.push(solved.residual);
            history.push((t, x[..nn].to_vec()));
            if history.len() > 3 {
                history.remove(0);
            }
            since_reset += 1;

            if lands && t < t_stop {
                // Slopes jump at a breakpoint: restart with a small backward-Euler step.
                history = vec![(t, x[..nn].to_vec())];
                since_reset = 0;
                h = first_step;
            } else if ratio.is_none_or(|r| r < 0.2) {
                h = h_try * 1.5;
            } else {
                h = h_try;
            }
        }

        Ok(TransientResult {
            node_names: self.node_names().to_vec(),
            branch_names: self.branch_names().to_vec(),
            times,
            states,
            kcl_residuals: residuals,
            imposed_start: opts.uic,
            stats,
        })
    }

    fn step_error(&self, e: NewtonFail, t: f64) -> SimError {
        match e {
            NewtonFail::Device {
                element, message, ..
            } => SimError::Model {
                element,
                message: format!("at t = {t:e} s: {message}"),
            },
            NewtonFail::Singular { .. } => SimError::Singular,
            NewtonFail::NoConvergence { .. } => SimError::StepTooSmall { t, min_step: 0.0 },
        }
    }
}

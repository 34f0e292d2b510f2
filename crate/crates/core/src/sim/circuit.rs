//! Modified nodal analysis: assembly, Newton iteration, DC operating point.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::device::{BiasPoint, TerminalCurrents, TerminalModel};

use super::library::ModelLibrary;
use super::netlist::{ElementKind, Netlist, GROUND};
use super::stimulus::Stimulus;
use super::{SimError, SimOptions};

type Node = Option<usize>;

#[derive(Debug, Clone)]
enum Bound {
    Resistor {
        a: Node,
        b: Node,
        g: f64,
    },
    Capacitor {
        a: Node,
        b: Node,
        c: f64,
    },
    Vsrc {
        p: Node,
        n: Node,
        stim: Stimulus,
        branch: usize,
    },
    Isrc {
        p: Node,
        n: Node,
        stim: Stimulus,
    },
    Mos {
        name: String,
        t: [Node; 4],
        model: Arc<dyn TerminalModel>,
        nfin: u32,
    },
}

/// A netlist with every node numbered and every model resolved.
#[derive(Debug, Clone)]
pub struct Circuit {
    nodes: Vec<String>,
    branches: Vec<String>,
    elems: Vec<Bound>,
    devices: HashMap<String, usize>,
    breakpoints: Vec<f64>,
}

/// Static part of the system at one state.
pub(crate) struct Assembly {
    /// Node KCL rows (current leaving each node) then source constraint rows.
    pub f: DVector<f64>,
    pub j: DMatrix<f64>,
    /// Net charge attached to each node.
    pub q: DVector<f64>,
    /// d(node charge)/d(unknown).
    pub cq: DMatrix<f64>,
}

/// Integration formula for node charges: i = a0 (q - q_prev) + a1 i_prev.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Companion<'a> {
    pub a0: f64,
    pub a1: f64,
    pub q_prev: &'a [f64],
    pub iq_prev: &'a [f64],
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Drive {
    pub t: f64,
    /// Source-stepping scale on every independent source.
    pub scale: f64,
    pub gmin: f64,
}

pub(crate) struct Solved {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug)]
pub(crate) enum NewtonFail {
    NoConvergence {
        x: Vec<f64>,
        residual: f64,
        iterations: usize,
    },
    Singular {
        iterations: usize,
    },
    Device {
        element: String,
        message: String,
        iterations: usize,
    },
}

impl NewtonFail {
    pub fn iterations(&self) -> usize {
        match self {
            NewtonFail::NoConvergence { iterations, .. }
            | NewtonFail::Singular { iterations }
            | NewtonFail::Device { iterations, .. } => *iterations,
        }
    }
}

/// How the operating point was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcMethod {
    Newton,
    GminStepping,
    SourceStepping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    pub node_names: Vec<String>,
    pub branch_names: Vec<String>,
    /// Node voltages followed by voltage-source branch currents.
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Largest node KCL residual, A.
    pub residual: f64,
    pub method: DcMethod,
}

impl DcSolution {
    pub fn voltage(&self, node: &str) -> Option<f64> {
        if node == GROUND {
            return Some(0.0);
        }
        self.node_names
            .iter()
            .position(|n| n == node)
            .map(|i| self.x[i])
    }

    /// Current through a voltage source, from its positive terminal into the source.
    pub fn branch_current(&self, source: &str) -> Option<f64> {
        let s = source.to_ascii_lowercase();
        self.branch_names
            .iter()
            .position(|n| *n == s)
            .map(|i| self.x[self.node_names.len() + i])
    }
}

impl Circuit {
    pub fn new(net: &Netlist, library: &ModelLibrary) -> Result<Self, SimError> {
        net.validate()?;
        let nodes = net.node_names();
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let node = |n: &str| -> Node {
            if n == GROUND {
                None
            } else {
                Some(index[n])
            }
        };
        let mut elems = Vec::new();
        let mut branches = Vec::new();
        let mut devices = HashMap::new();
        let mut breakpoints = Vec::new();
        for e in &net.elements {
            let b = match &e.kind {
                ElementKind::Resistor { n1, n2, ohms } => Bound::Resistor {
                    a: node(n1),
                    b: node(n2),
                    g: 1.0 / ohms,
                },
                ElementKind::Capacitor { n1, n2, farads } => Bound::Capacitor {
                    a: node(n1),
                    b: node(n2),
                    c: *farads,
                },
                ElementKind::VoltageSource { pos, neg, stimulus } => {
                    breakpoints.extend(stimulus.breakpoints());
                    branches.push(e.name.clone());
                    Bound::Vsrc {
                        p: node(pos),
                        n: node(neg),
                        stim: stimulus.clone(),
                        branch: branches.len() - 1,
                    }
                }
                ElementKind::CurrentSource { pos, neg, stimulus } => {
                    breakpoints.extend(stimulus.breakpoints());
                    Bound::Isrc {
                        p: node(pos),
                        n: node(neg),
                        stim: stimulus.clone(),
                    }
                }
                ElementKind::Transistor {
                    d,
                    g,
                    s,
                    b,
                    model,
                    point,
                    nfin,
                } => {
                    let m = library
                        .resolve(model, *point)
                        .map_err(|message| SimError::Model {
                            element: e.name.clone(),
                            message,
                        })?;
                    devices.insert(e.name.clone(), elems.len());
                    Bound::Mos {
                        name: e.name.clone(),
                        t: [node(d), node(g), node(s), node(b)],
                        model: m,
                        nfin: *nfin,
                    }
                }
            };
            elems.push(b);
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Ok(Self {
            nodes,
            branches,
            elems,
            devices,
            breakpoints,
        })
    }

    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn branch_names(&self) -> &[String] {
        &self.branches
    }

    pub fn dimension(&self) -> usize {
        self.nodes.len() + self.branches.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub(crate) fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Terminal currents of transistor `name` at a stored state vector.
    pub fn device_currents(&self, name: &str, x: &[f64]) -> Result<TerminalCurrents, SimError> {
        let key = name.to_ascii_lowercase();
        let idx = *self
            .devices
            .get(&key)
            .ok_or_else(|| SimError::UnknownElement(name.to_string()))?;
        let Bound::Mos { t, model, nfin, .. } = &self.elems[idx] else {
            unreachable!()
        };
        let bias = BiasPoint::from_array(t.map(|n| volt(x, n)));
        model
            .currents(&bias, *nfin)
            .map_err(|source| SimError::Device {
                element: key,
                source,
            })
    }

    /// Nodes with no DC path to ground through resistors, sources or channels.
    pub fn floating_nodes(&self) -> Vec<String> {
        let n = self.nodes.len();
        // Index n stands for ground.
        let mut parent: Vec<usize> = (0..=n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut union = |a: Node, b: Node| {
            let (ra, rb) = (
                find(&mut parent, a.unwrap_or(n)),
                find(&mut parent, b.unwrap_or(n)),
            );
            parent[ra] = rb;
        };
        for e in &self.elems {
            match e {
                Bound::Resistor { a, b, .. } => union(*a, *b),
                Bound::Vsrc { p, n, .. } => union(*p, *n),
                Bound::Mos { t, .. } => union(t[0], t[2]),
                Bound::Capacitor { .. } | Bound::Isrc { .. } => {}
            }
        }
        let ground = find(&mut parent, n);
        (0..n)
            .filter(|&i| find(&mut parent, i) != ground)
            .map(|i| self.nodes[i].clone())
            .collect()
    }

    pub(crate) fn assemble(
        &self,
        x: &[f64],
        drive: Drive,
        opts: &SimOptions,
    ) -> Result<Assembly, NewtonFail> {
        let nn = self.nodes.len();
        let dim = self.dimension();
        let mut f = DVector::zeros(dim);
        let mut j = DMatrix::zeros(dim, dim);
        let mut q = DVector::zeros(nn);
        let mut cq = DMatrix::zeros(nn, dim);
        for e in &self.elems {
            match e {
                Bound::Resistor { a, b, g } => {
                    let i = g * (volt(x, *a) - volt(x, *b));
                    stamp_pair(&mut f, &mut j, *a, *b, i, *g);
                }
                Bound::Capacitor { a, b, c } => {
                    let qc = c * (volt(x, *a) - volt(x, *b));
                    if let Some(a) = *a {
                        q[a] += qc;
                        cq[(a, a)] += c;
                        if let Some(b) = *b {
                            cq[(a, b)] -= c;
                        }
                    }
                    if let Some(b) = *b {
                        q[b] -= qc;
                        cq[(b, b)] += c;
                        if let Some(a) = *a {
                            cq[(b, a)] -= c;
                        }
                    }
                }
                Bound::Vsrc { p, n, stim, branch } => {
                    let row = nn + branch;
                    let ib = x[row];
                    f[row] = volt(x, *p) - volt(x, *n) - drive.scale * stim.eval(drive.t);
                    if let Some(p) = *p {
                        f[p] += ib;
                        j[(p, row)] += 1.0;
                        j[(row, p)] += 1.0;
                    }
                    if let Some(n) = *n {
                        f[n] -= ib;
                        j[(n, row)] -= 1.0;
                        j[(row, n)] -= 1.0;
                    }
                }
                Bound::Isrc { p, n, stim } => {
                    let i = drive.scale * stim.eval(drive.t);
                    if let Some(p) = *p {
                        f[p] += i;
                    }
                    if let Some(n) = *n {
                        f[n] -= i;
                    }
                }
                Bound::Mos {
                    name,
                    t,
                    model,
                    nfin,
                } => {
                    let v = t.map(|n| volt(x, n));
                    let eval = |v: [f64; 4]| {
                        model
                            .evaluate(&BiasPoint::from_array(v), *nfin)
                            .map_err(|err| NewtonFail::Device {
                                element: name.clone(),
                                message: err.to_string(),
                                iterations: 0,
                            })
                    };
                    let base = eval(v)?;
                    let (i0, q0) = (base.currents.as_array(), base.charges.as_array());
                    for k in 0..4 {
                        if let Some(row) = t[k] {
                            f[row] += i0[k];
                            q[row] += q0[k];
                        }
                    }
                    for (c, col) in t.iter().enumerate() {
                        let Some(col) = *col else { continue };
                        let h = (opts.fd_rel * v[c].abs()).max(opts.fd_abs);
                        let mut vp = v;
                        vp[c] += h;
                        let pert = eval(vp)?;
                        let (i1, q1) = (pert.currents.as_array(), pert.charges.as_array());
                        for k in 0..4 {
                            if let Some(row) = t[k] {
                                j[(row, col)] += (i1[k] - i0[k]) / h;
                                cq[(row, col)] += (q1[k] - q0[k]) / h;
                            }
                        }
                    }
                }
            }
        }
        if drive.gmin > 0.0 {
            for k in 0..nn {
                f[k] += drive.gmin * x[k];
                j[(k, k)] += drive.gmin;
            }
        }
        Ok(Assembly { f, j, q, cq })
    }

    /// Damped Newton iteration. The returned point is one where the KCL
    /// residual and the next Newton correction are both within tolerance.
    pub(crate) fn newton(
        &self,
        x0: &[f64],
        drive: Drive,
        companion: Option<Companion<'_>>,
        max_iter: usize,
        opts: &SimOptions,
    ) -> Result<Solved, NewtonFail> {
        let nn = self.nodes.len();
        let mut x = x0.to_vec();
        let mut residual = f64::INFINITY;
        for it in 0..max_iter {
            let mut a = self.assemble(&x, drive, opts).map_err(|e| match e {
                NewtonFail::Device {
                    element, message, ..
                } => NewtonFail::Device {
                    element,
                    message,
                    iterations: it,
                },
                other => other,
            })?;
            if let Some(c) = companion {
                for k in 0..nn {
                    a.f[k] += c.a0 * (a.q[k] - c.q_prev[k]) + c.a1 * c.iq_prev[k];
                }
                let scaled = &a.cq * c.a0;
                a.j.rows_mut(0, nn).zip_apply(&scaled, |jv, cv| *jv += cv);
            }
            if a.f.iter().any(|v| !v.is_finite()) {
                return Err(NewtonFail::NoConvergence {
                    x,
                    residual,
                    iterations: it,
                });
            }
            residual = a.f.rows(0, nn).amax();
            let constraint = a.f.rows(nn, self.branches.len()).amax();
            let rhs = -&a.f;
            let Some(dx) = a.j.lu().solve(&rhs) else {
                return Err(NewtonFail::Singular { iterations: it + 1 });
            };
            if dx.iter().any(|v| !v.is_finite()) {
                return Err(NewtonFail::Singular { iterations: it + 1 });
            }
            let small =
                (0..nn).all(|k| dx[k].abs() <= opts.vntol + opts.newton_reltol * x[k].abs());
            if small && residual <= opts.kcl_tol && constraint <= opts.vntol {
                return Ok(Solved {
                    x,
                    q: a.q.iter().copied().collect(),
                    iterations: it + 1,
                    residual,
                });
            }
            let max_dv = (0..nn).map(|k| dx[k].abs()).fold(0.0, f64::max);
            let s = if max_dv > opts.step_limit {
                opts.step_limit / max_dv
            } else {
                1.0
            };
            for (xi, d) in x.iter_mut().zip(dx.iter()) {
                *xi += s * d;
            }
        }
        Err(NewtonFail::NoConvergence {
            x,
            residual,
            iterations: max_iter,
        })
    }

    /// DC operating point with all sources at their value at time `t`.
    pub fn solve_dc_at(&self, t: f64, opts: &SimOptions) -> Result<DcSolution, SimError> {
        opts.validate()?;
        if let Some(node) = self.floating_nodes().into_iter().next() {
            return Err(SimError::FloatingNode(node));
        }
        let dim = self.dimension();
        let zeros = vec![0.0; dim];
        let max = opts.max_dc_iterations;
        let drive = |scale: f64, gmin: f64| Drive { t, scale, gmin };
        let mut total = 0;
        let mut last = match self.newton(&zeros, drive(1.0, opts.gmin), None, max, opts) {
            Ok(s) => return Ok(self.dc_solution(s, total, DcMethod::Newton)),
            Err(e) => {
                total += e.iterations();
                e
            }
        };

        // gmin stepping, 1e-3 S down to 1e-12 S.
        let mut x = zeros.clone();
        let mut ok = true;
        for k in 3..=12 {
            let g = 10f64.powi(-k).max(opts.gmin);
            match self.newton(&x, drive(1.0, g), None, max, opts) {
                Ok(s) => {
                    total += s.iterations;
                    x = s.x;
                }
                Err(e) => {
                    total += e.iterations();
                    last = e;
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            match self.newton(&x, drive(1.0, opts.gmin), None, max, opts) {
                Ok(s) => return Ok(self.dc_solution(s, total, DcMethod::GminStepping)),
                Err(e) => {
                    total += e.iterations();
                    last = e;
                }
            }
        }

        // Source stepping, 10% to 100%.
        let mut x = zeros;
        for k in 1..=10 {
            match self.newton(&x, drive(k as f64 / 10.0, opts.gmin), None, max, opts) {
                Ok(s) => {
                    total += s.iterations;
                    if k == 10 {
                        return Ok(self.dc_solution(s, total, DcMethod::SourceStepping));
                    }
                    x = s.x;
                }
                Err(e) => {
                    last = e;
                    break;
                }
            }
        }
        Err(self.dc_failure(last))
    }

    pub fn solve_dc(&self, opts: &SimOptions) -> Result<DcSolution, SimError> {
        self.solve_dc_at(0.0, opts)
    }

    fn dc_solution(&self, s: Solved, extra: usize, method: DcMethod) -> DcSolution {
        DcSolution {
            node_names: self.nodes.clone(),
            branch_names: self.branches.clone(),
            x: s.x,
            iterations: extra + s.iterations,
            residual: s.residual,
            method,
        }
    }

    fn dc_failure(&self, fail: NewtonFail) -> SimError {
        match fail {
            NewtonFail::NoConvergence { x, residual, .. } => SimError::DcNonConvergence {
                residual,
                last_iterate: self.nodes.iter().cloned().zip(x).collect(),
                detail: None,
            },
            NewtonFail::Singular { .. } => SimError::Singular,
            NewtonFail::Device {
                element, message, ..
            } => SimError::DcNonConvergence {
                residual: f64::NAN,
                last_iterate: vec![],
                detail: Some(format!("transistor `{element}`: {message}")),
            },
        }
    }
}

fn volt(x: &[f64], n: Node) -> f64 {
    n.map_or(0.0, |i| x[i])
}

fn stamp_pair(f: &mut DVector<f64>, j: &mut DMatrix<f64>, a: Node, b: Node, i: f64, g: f64) {
    if let Some(a) = a {
        f[a] += i;
        j[(a, a)] += g;
    }
    if let Some(b) = b {
        f[b] -= i;
        j[(b, b)] += g;
    }
    if let (Some(a), Some(b)) = (a, b) {
        j[(a, b)] -= g;
        j[(b, a)] -= g;
    }
}

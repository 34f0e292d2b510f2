//! Nelder-Mead minimization with restarts.

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Initial edge length along every coordinate.
    pub step: f64,
    /// Stop when the spread of objective values falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter below this.
    pub x_tol: f64,
    /// Fresh simplexes built around the best point after convergence.
    pub max_restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            step: 0.1,
            f_tol: 1e-9,
            x_tol: 1e-6,
            max_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after each iteration; never increases.
    pub trace: Vec<f64>,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn build_simplex<F: FnMut(&[f64]) -> f64>(
    center: &[f64],
    fc: f64,
    step: f64,
    obj: &mut Counted<F>,
) -> Vec<(Vec<f64>, f64)> {
    let mut s = vec![(center.to_vec(), fc)];
    for i in 0..center.len() {
        let mut x = center.to_vec();
        x[i] += step;
        let f = obj.call(&x);
        s.push((x, f));
    }
    s
}

/// Minimizes `f` from `x0`. Deterministic for a deterministic objective.
pub fn minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let n = x0.len();
    let mut obj = Counted { f, evals: 0 };
    let f0 = obj.call(x0);
    if n == 0 {
        return SimplexResult {
            x: vec![],
            f: f0,
            iterations: 0,
            evaluations: 1,
            converged: true,
            trace: vec![f0],
        };
    }
    let mut simplex = build_simplex(x0, f0, opts.step, &mut obj);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut restarts = 0;
    let mut best_at_restart = f64::INFINITY;
    let mut converged = false;
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    while obj.evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (spread <= opts.f_tol && diameter <= opts.x_tol) || simplex[0].1 == 0.0 {
            let best = simplex[0].1;
            // A restart that finds nothing new ends the search.
            if restarts >= opts.max_restarts || best >= best_at_restart - opts.f_tol || best == 0.0
            {
                converged = true;
                break;
            }
            restarts += 1;
            best_at_restart = best;
            let center = simplex[0].0.clone();
            simplex = build_simplex(&center, best, opts.step, &mut obj);
            continue;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |coef: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };
        let worst = simplex[n].0.clone();
        let xr = toward(alpha, &worst);
        let fr = obj.call(&xr);
        if fr < simplex[0].1 {
            let xe = toward(gamma, &worst);
            let fe = obj.call(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = toward(rho, &worst);
                let fc = obj.call(&xc);
                (xc, fc)
            } else {
                let xc = toward(-rho, &worst);
                let fc = obj.call(&xc);
                (xc, fc)
            };
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&v.0)
                        .map(|(b, x)| b + sigma * (x - b))
                        .collect();
                    let f = obj.call(&x);
                    *v = (x, f);
                }
            }
        }
        let best = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        trace.push(best);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexResult {
        x,
        f,
        iterations,
        evaluations: obj.evals,
        converged,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(
            rosen,
            &[-1.2, 1.0],
            &SimplexOptions {
                max_evals: 5000,
                ..Default::default()
            },
        );
        assert!(r.converged);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            r.x
        );
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stops_at_eval_budget() {
        let r = minimize(
            |x: &[f64]| x.iter().map(|v| v.abs().sqrt()).sum(),
            &[3.0; 5],
            &SimplexOptions {
                max_evals: 50,
                ..Default::default()
            },
        );
        assert!(!r.converged);
        assert!(r.evaluations <= 50 + 6);
    }

    #[test]
    fn zero_objective_at_start_is_converged() {
        let r = minimize(|x: &[f64]| x[0] * x[0], &[0.0], &SimplexOptions::default());
        assert!(r.converged);
        assert_eq!(r.f, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let r = minimize(
            |x: &[f64]| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 2.0).powi(2)
                }
            },
            &[0.5],
            &SimplexOptions::default(),
        );
        assert!((r.x[0] - 2.0).abs() < 1e-4);
    }
}

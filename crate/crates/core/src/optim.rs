//! Derivative-free minimization (Nelder-Mead simplex).

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop once `f_max - f_min <= f_abs_tol + f_rel_tol * |f_min|` ...
    pub f_abs_tol: f64,
    pub f_rel_tol: f64,
    /// ... and every vertex lies within `x_tol` (max-norm) of the best one.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_evals: 20_000, f_abs_tol: 1e-12, f_rel_tol: 1e-12, x_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead with standard coefficients (1, 2, 1/2, 1/2). `steps` sets the
/// initial simplex edge along each axis. Non-finite objective values are
/// treated as `+inf`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], steps: &[f64], opts: &SimplexOptions) -> Minimum {
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if steps[i] != 0.0 { steps[i] } else { 1e-3 };
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if worst - best <= opts.f_abs_tol + opts.f_rel_tol * best.abs() && spread <= opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, b) in x.iter_mut().zip(&x_best) {
                *xi = b + 0.5 * (*xi - b);
            }
            *v = eval(x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evals, converged }
}

/// Repeated Nelder-Mead runs, each restarted from the previous best point
/// with a fresh simplex, until a restart no longer improves the value.
/// Guards against the simplex collapsing prematurely.
pub fn nelder_mead_restarted(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    opts: &SimplexOptions,
    max_restarts: usize,
) -> Minimum {
    let mut best = nelder_mead(&mut f, x0, steps, opts);
    for _ in 0..max_restarts {
        if best.evals >= opts.max_evals {
            break;
        }
        let budget = SimplexOptions { max_evals: opts.max_evals - best.evals, ..*opts };
        let next = nelder_mead(&mut f, &best.x, steps, &budget);
        let improved = next.value < best.value - opts.f_abs_tol - opts.f_rel_tol * best.value.abs();
        let evals = best.evals + next.evals;
        if next.value <= best.value {
            best = Minimum { evals, ..next };
        } else {
            best.evals = evals;
        }
        if !improved {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead_restarted(f, &[-1.2, 1.0], &[0.5, 0.5], &SimplexOptions::default(), 5);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn nan_is_treated_as_infeasible() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        let m = nelder_mead(f, &[0.5], &[0.5], &SimplexOptions::default());
        assert!((m.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn respects_evaluation_cap() {
        let opts = SimplexOptions { max_evals: 30, ..Default::default() };
        let m = nelder_mead(|x: &[f64]| x.iter().map(|v| v * v).sum(), &[3.0; 4], &[1.0; 4], &opts);
        assert!(!m.converged);
        assert!(m.evals <= 30 + 4);
    }
}

//! ARMA(1,1)-GARCH(1,1) filtering and Gaussian quasi-maximum-likelihood
//! estimation.
//!
//! ```text
//! y_t       = c + a y_{t-1} + b sigma_{t-1} eps_{t-1} + sigma_t eps_t
//! sigma_t^2 = kappa + xi sigma_{t-1}^2 eps_{t-1}^2 + zeta sigma_{t-1}^2
//! ```

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::optim::{nelder_mead_restarted, SimplexOptions};
use crate::stats;

pub const MIN_FIT_OBSERVATIONS: usize = 250;
pub const DEFAULT_WINDOW: usize = 1000;
const MAX_EVALS: usize = 20_000;
/// Fits with `xi + zeta` this close to one are reported as non-stationary.
const STATIONARITY_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
    pub xi: f64,
    pub zeta: f64,
}

impl GarchParams {
    pub fn new(c: f64, a: f64, b: f64, kappa: f64, xi: f64, zeta: f64) -> Result<Self> {
        if ![c, a, b, kappa, xi, zeta].iter().all(|v| v.is_finite()) {
            return Err(invalid("GARCH parameters must be finite"));
        }
        if kappa <= 0.0 {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        if xi < 0.0 || zeta < 0.0 {
            return Err(invalid(format!("xi and zeta must be non-negative, got {xi}, {zeta}")));
        }
        if xi + zeta >= 1.0 {
            return Err(Error::Stationarity(xi + zeta));
        }
        if a.abs() >= 1.0 {
            return Err(invalid(format!("|a| must be below 1, got {a}")));
        }
        Ok(Self { c, a, b, kappa, xi, zeta })
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.kappa / (1.0 - self.xi - self.zeta)
    }

    /// `sigma_t` from the previous volatility and residual.
    #[inline]
    pub fn next_sigma(&self, sigma_prev: f64, eps_prev: f64) -> f64 {
        let s2 = sigma_prev * sigma_prev;
        (self.kappa + self.xi * s2 * eps_prev * eps_prev + self.zeta * s2).sqrt()
    }
}

/// Pre-sample values `(sigma_0, eps_0, y_0)` of the recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterInit {
    pub sigma0: f64,
    pub eps0: f64,
    pub y0: f64,
}

impl FilterInit {
    pub fn new(sigma0: f64, eps0: f64) -> Self {
        Self { sigma0, eps0, y0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub residuals: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub last_y: f64,
}

impl FilterState {
    pub fn last_sigma(&self) -> Option<f64> {
        self.sigmas.last().copied()
    }

    pub fn last_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }
}

/// Runs the recursion over `returns`, producing `sigma_t` and
/// `eps_t = (y_t - c - a y_{t-1} - b sigma_{t-1} eps_{t-1}) / sigma_t`.
pub fn filter(returns: &[f64], g: &GarchParams, init: FilterInit) -> Result<FilterState> {
    if !(init.sigma0 > 0.0) {
        return Err(invalid(format!("sigma0 must be positive, got {}", init.sigma0)));
    }
    let mut residuals = Vec::with_capacity(returns.len());
    let mut sigmas = Vec::with_capacity(returns.len());
    let (mut sigma, mut eps, mut y_prev) = (init.sigma0, init.eps0, init.y0);
    for &y in returns {
        let mean = g.c + g.a * y_prev + g.b * sigma * eps;
        sigma = g.next_sigma(sigma, eps);
        eps = (y - mean) / sigma;
        sigmas.push(sigma);
        residuals.push(eps);
        y_prev = y;
    }
    Ok(FilterState { residuals, sigmas, last_y: y_prev })
}

/// Generates returns from given standardized innovations; the inverse of
/// [`filter`].
pub fn simulate(g: &GarchParams, init: FilterInit, innovations: &[f64]) -> Vec<f64> {
    let (mut sigma, mut eps, mut y_prev) = (init.sigma0, init.eps0, init.y0);
    innovations
        .iter()
        .map(|&e| {
            let mean = g.c + g.a * y_prev + g.b * sigma * eps;
            sigma = g.next_sigma(sigma, eps);
            eps = e;
            y_prev = mean + sigma * e;
            y_prev
        })
        .collect()
}

/// Gaussian quasi log-likelihood of `returns`; `-inf` if a variance is not
/// positive and finite.
pub fn gaussian_log_likelihood(returns: &[f64], g: &GarchParams, init: FilterInit) -> f64 {
    let (mut sigma, mut eps, mut y_prev) = (init.sigma0, init.eps0, init.y0);
    let mut ll = 0.0;
    for &y in returns {
        let mean = g.c + g.a * y_prev + g.b * sigma * eps;
        sigma = g.next_sigma(sigma, eps);
        if !(sigma > 0.0 && sigma.is_finite()) {
            return f64::NEG_INFINITY;
        }
        eps = (y - mean) / sigma;
        ll -= sigma.ln() + 0.5 * eps * eps;
        y_prev = y;
    }
    ll - 0.5 * returns.len() as f64 * (2.0 * PI).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub params: GarchParams,
    pub init: FilterInit,
    pub state: FilterState,
    pub log_likelihood: f64,
    pub start_log_likelihood: f64,
    pub evals: usize,
}

/// Unconstrained coordinates: `c/sd`, `atanh a`, `atanh b`, `ln(kappa/var)`,
/// and two logits of the simplex `(xi, zeta, 1 - xi - zeta)`.
fn from_raw(p: &[f64], sd: f64) -> GarchParams {
    let (e1, e2) = (p[4].exp(), p[5].exp());
    let denom = 1.0 + e1 + e2;
    GarchParams {
        c: p[0] * sd,
        a: p[1].tanh(),
        b: p[2].tanh(),
        kappa: p[3].exp() * sd * sd,
        xi: e1 / denom,
        zeta: e2 / denom,
    }
}

fn to_raw(g: &GarchParams, sd: f64) -> [f64; 6] {
    let rest = 1.0 - g.xi - g.zeta;
    [
        g.c / sd,
        g.a.atanh(),
        g.b.atanh(),
        (g.kappa / (sd * sd)).ln(),
        (g.xi / rest).ln(),
        (g.zeta / rest).ln(),
    ]
}

/// Gaussian QMLE of the ARMA(1,1)-GARCH(1,1) model.
///
/// The recursion starts from `sigma_0^2` = sample variance, `eps_0 = 0`,
/// `y_0 = 0`. The simplex search runs on [`from_raw`] coordinates, which
/// keep `kappa > 0`, `xi, zeta >= 0` and `xi + zeta < 1` by construction.
pub fn fit_arma_garch(returns: &[f64]) -> Result<GarchFit> {
    if returns.len() < MIN_FIT_OBSERVATIONS {
        return Err(Error::InsufficientData { needed: MIN_FIT_OBSERVATIONS, got: returns.len() });
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(invalid("returns must be finite"));
    }
    let var = stats::sample_variance(returns);
    let level = stats::mean(returns);
    if !(var > 1e-24 * level * level) || var < 1e-300 {
        return Err(Error::Degenerate("returns have zero variance".into()));
    }
    let sd = var.sqrt();
    let init = FilterInit::new(sd, 0.0);

    let start = GarchParams { c: stats::mean(returns), a: 0.0, b: 0.0, kappa: 0.1 * var, xi: 0.1, zeta: 0.8 };
    let start_ll = gaussian_log_likelihood(returns, &start, init);
    let objective = |p: &[f64]| -> f64 {
        let ll = gaussian_log_likelihood(returns, &from_raw(p, sd), init);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let opts = SimplexOptions { max_evals: MAX_EVALS, f_abs_tol: 1e-9, f_rel_tol: 1e-12, x_tol: 1e-6 };
    let m = nelder_mead_restarted(objective, &to_raw(&start, sd), &[0.1, 0.2, 0.2, 0.5, 0.5, 0.5], &opts, 4);
    if !m.converged {
        return Err(Error::NonConvergence { evals: m.evals });
    }
    let params = from_raw(&m.x, sd);
    if params.xi + params.zeta >= 1.0 - STATIONARITY_MARGIN {
        return Err(Error::Stationarity(params.xi + params.zeta));
    }
    let params = GarchParams::new(params.c, params.a, params.b, params.kappa, params.xi, params.zeta)?;
    let state = filter(returns, &params, init)?;
    Ok(GarchFit { params, init, state, log_likelihood: -m.value, start_log_likelihood: start_ll, evals: m.evals })
}

/// One window of a rolling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFit {
    pub params: GarchParams,
    pub residuals: Vec<f64>,
    pub last_sigma: f64,
    pub last_residual: f64,
    pub last_y: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    /// Index (exclusive) of the window's last observation in the input.
    pub end: usize,
    pub outcome: Result<WindowFit>,
}

/// Refits the model on each trailing `window` of `returns`, advancing by
/// `step`. A failed window is recorded in its [`WindowResult`] and the sweep
/// continues.
pub fn rolling_residual_sets(returns: &[f64], window: usize, step: usize) -> Result<Vec<WindowResult>> {
    if window < MIN_FIT_OBSERVATIONS {
        return Err(invalid(format!("window must be at least {MIN_FIT_OBSERVATIONS}")));
    }
    if step == 0 {
        return Err(invalid("step must be positive"));
    }
    if returns.len() < window {
        return Err(Error::InsufficientData { needed: window, got: returns.len() });
    }
    let count = (returns.len() - window) / step + 1;
    Ok((0..count)
        .map(|k| {
            let end = window + k * step;
            let outcome = fit_arma_garch(&returns[end - window..end]).map(|fit| WindowFit {
                params: fit.params,
                last_sigma: *fit.state.sigmas.last().unwrap(),
                last_residual: *fit.state.residuals.last().unwrap(),
                last_y: fit.state.last_y,
                residuals: fit.state.residuals,
                log_likelihood: fit.log_likelihood,
            });
            WindowResult { end, outcome }
        })
        .collect())
}

/// Sample skewness `m3 / m2^1.5` and excess kurtosis `m4 / m2^2 - 3` from
/// biased central moments.
pub fn sample_moments(residuals: &[f64]) -> Result<(f64, f64)> {
    if residuals.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: residuals.len() });
    }
    let (m2, m3, m4) = stats::central_moments(residuals);
    if !(m2 > 0.0) || m2 <= 1e-300 {
        return Err(Error::Degenerate("residuals have zero variance".into()));
    }
    Ok((m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn parameter_validation() {
        assert!(GarchParams::new(0.0, 0.0, 0.0, 0.0, 0.1, 0.8).is_err());
        assert!(matches!(GarchParams::new(0.0, 0.0, 0.0, 1.0, 0.3, 0.7), Err(Error::Stationarity(_))));
        assert!(GarchParams::new(0.0, 1.0, 0.0, 1.0, 0.1, 0.8).is_err());
        assert!(GarchParams::new(0.0, 0.5, -0.3, 1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn constant_variance_when_arch_terms_vanish() {
        let g = GarchParams::new(0.0, 0.0, 0.0, 4e-4, 0.0, 0.0).unwrap();
        let y = normals(20, 1);
        let st = filter(&y, &g, FilterInit::new(0.5, 1.0)).unwrap();
        assert!(st.sigmas.iter().all(|&s| (s - 0.02).abs() < 1e-15));
        for (e, y) in st.residuals.iter().zip(&y) {
            assert!((e - y / 0.02).abs() < 1e-12);
        }
    }

    #[test]
    fn simulate_then_filter_round_trip() {
        let g = GarchParams::new(1e-4, 0.3, -0.2, 4.4115e-6, 0.2289, 0.7177).unwrap();
        let init = FilterInit { sigma0: 0.01, eps0: 0.4, y0: 0.002 };
        let e = normals(2000, 2);
        let y = simulate(&g, init, &e);
        let st = filter(&y, &g, init).unwrap();
        let worst = st.residuals.iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
        assert_eq!(st.last_y, *y.last().unwrap());
        assert_eq!(filter(&y, &g, init).unwrap(), st);
    }

    #[test]
    fn raw_coordinates_round_trip() {
        let g = GarchParams::new(2e-4, 0.4, -0.1, 3e-6, 0.2, 0.7).unwrap();
        let back = from_raw(&to_raw(&g, 0.01), 0.01);
        for (a, b) in [(g.c, back.c), (g.a, back.a), (g.b, back.b), (g.kappa, back.kappa), (g.xi, back.xi), (g.zeta, back.zeta)] {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-10));
        }
    }

    #[test]
    fn rejects_degenerate_and_short_input() {
        assert!(matches!(fit_arma_garch(&[0.001; 300]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_arma_garch(&[0.001; 10]), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn sample_moments_of_two_point_law() {
        let (s, k) = sample_moments(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!((s, k), (0.0, -2.0));
        assert!(sample_moments(&[2.0; 8]).is_err());
    }

    #[test]
    fn rolling_window_counts() {
        let g = GarchParams::new(0.0, 0.0, 0.0, 1e-5, 0.1, 0.8).unwrap();
        let y = simulate(&g, FilterInit::new(0.01, 0.0), &normals(260, 3));
        assert_eq!(rolling_residual_sets(&y[..250], 250, 1).unwrap().len(), 1);
        let sets = rolling_residual_sets(&y, 250, 5).unwrap();
        assert_eq!(sets.len(), 3);
        assert_eq!(sets.last().unwrap().end, 260);
        assert!(rolling_residual_sets(&y[..200], 250, 1).is_err());
    }
}

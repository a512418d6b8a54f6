//! Tail-parameter estimation: the skewness/kurtosis curve of stdNTS, the
//! global `(alpha, theta)` fit, per-window `B` fits against kernel-smoothed
//! empirical CDFs, and the ARIMA(1,1,0) dynamics of `B`.

use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::interp::hermite;
use crate::inversion::{build_cdf, TabulatedCdf};
use crate::nts::{StdNtsParams, TailShape};
use crate::optim::{nelder_mead_restarted, SimplexOptions};
use crate::stats;

pub const DEFAULT_CURVE_SIZE: usize = 201;
pub const MIN_CURVE_SIZE: usize = 101;
pub const MIN_CURVE_POINTS: usize = 10;
pub const MIN_B_SAMPLES: usize = 30;
pub const MIN_ARIMA_LENGTH: usize = 50;
/// Grid size of the stdNTS tables used by the `B` search.
pub const DEFAULT_B_TABLE_SIZE: usize = 512;

const ALPHA_RANGE: (f64, f64) = (0.05, 1.95);
const THETA_RANGE: (f64, f64) = (0.05, 50.0);

/// `(S(B), K(B))` for `B` on a uniform grid over `[-1, 1]`, with
/// `f(S) = K` by cubic Hermite interpolation in `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewKurtCurve {
    pub alpha: f64,
    pub theta: f64,
    pub b_grid: Vec<f64>,
    pub skew_values: Vec<f64>,
    pub kurt_values: Vec<f64>,
    /// `dK/dS` at each node.
    slopes: Vec<f64>,
}

/// `dS/dB` and `dK/dB` of stdNTS in closed form.
fn moment_derivatives(alpha: f64, theta: f64, b: f64) -> (f64, f64) {
    let s0 = ((2.0 - alpha) / (2.0 * theta)).sqrt();
    let k = (4.0 - alpha) / (2.0 - alpha);
    let ds = s0 * 3.0 * (1.0 + (k - 3.0) * b * b);
    let p = (2.0 - alpha) / (2.0 * theta);
    let w = 2.0 - alpha;
    let q = b * b;
    let dk_dq = p * (2.0 * (alpha - 4.0) * (alpha - 6.0) * q / (w * w) + (24.0 - 6.0 * alpha) / w * (1.0 - 2.0 * q) - 6.0 * (1.0 - q));
    (ds, 2.0 * b * dk_dq)
}

impl SkewKurtCurve {
    /// `f(S)`: kurtosis on the curve at skewness `s`; the nearest endpoint's
    /// kurtosis outside the curve's skewness range.
    pub fn kurtosis_at(&self, s: f64) -> f64 {
        let n = self.skew_values.len();
        if s <= self.skew_values[0] {
            return self.kurt_values[0];
        }
        if s >= self.skew_values[n - 1] {
            return self.kurt_values[n - 1];
        }
        let j = self.skew_values.partition_point(|&v| v <= s);
        let i = j - 1;
        let (x, k, d) = (&self.skew_values, &self.kurt_values, &self.slopes);
        hermite(x[i], x[j], k[i], k[j], d[i], d[j], s)
    }

    pub fn skew_range(&self) -> (f64, f64) {
        (self.skew_values[0], *self.skew_values.last().unwrap())
    }

    /// Mean squared kurtosis residual of `(skew, exkurt)` points.
    pub fn mse(&self, points: &[(f64, f64)]) -> f64 {
        points.iter().map(|&(s, k)| (self.kurtosis_at(s) - k).powi(2)).sum::<f64>() / points.len() as f64
    }
}

pub fn build_curve(alpha: f64, theta: f64, grid_size: usize) -> Result<SkewKurtCurve> {
    let shape = TailShape::new(alpha, theta)?;
    if grid_size < MIN_CURVE_SIZE {
        return Err(invalid(format!("curve grid needs at least {MIN_CURVE_SIZE} points")));
    }
    let b_grid: Vec<f64> = (0..grid_size).map(|j| -1.0 + 2.0 * j as f64 / (grid_size - 1) as f64).collect();
    let mut skew_values = Vec::with_capacity(grid_size);
    let mut kurt_values = Vec::with_capacity(grid_size);
    let mut slopes = Vec::with_capacity(grid_size);
    for &b in &b_grid {
        let p = StdNtsParams::with_shape(shape, b)?;
        skew_values.push(p.skewness());
        kurt_values.push(p.excess_kurtosis());
        let (ds, dk) = moment_derivatives(alpha, theta, b);
        slopes.push(dk / ds);
    }
    if !skew_values.windows(2).all(|w| w[0] < w[1]) || slopes.iter().any(|d| !d.is_finite()) {
        return Err(Error::CurveRejected(format!("skewness not strictly increasing in B at alpha={alpha}, theta={theta}")));
    }
    Ok(SkewKurtCurve { alpha, theta, b_grid, skew_values, kurt_values, slopes })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailShapeFit {
    pub alpha: f64,
    pub theta: f64,
    pub mse: f64,
}

fn check_points(points: &[(f64, f64)], needed: usize) -> Result<()> {
    if points.len() < needed {
        return Err(Error::InsufficientData { needed, got: points.len() });
    }
    if points.iter().any(|(s, k)| !s.is_finite() || !k.is_finite()) {
        return Err(invalid("skewness/kurtosis points must be finite"));
    }
    Ok(())
}

fn curve_mse(alpha: f64, theta: f64, points: &[(f64, f64)]) -> f64 {
    match build_curve(alpha, theta, DEFAULT_CURVE_SIZE) {
        Ok(c) => c.mse(points),
        Err(_) => f64::INFINITY,
    }
}

/// `(alpha*, theta*)` minimizing the mean squared distance between sample
/// kurtoses and the curve's kurtosis at the sample skewnesses.
///
/// A coarse grid over `alpha in [0.05, 1.95]` and log-spaced
/// `theta in [0.05, 50]` seeds a simplex refinement in
/// `(logit(alpha/2), ln theta)`.
pub fn fit_alpha_theta(points: &[(f64, f64)]) -> Result<TailShapeFit> {
    check_points(points, MIN_CURVE_POINTS)?;
    let (n_alpha, n_theta) = (39, 41);
    let (mut best, mut best_val) = ((1.0, 1.0), f64::INFINITY);
    for i in 0..n_alpha {
        let alpha = ALPHA_RANGE.0 + (ALPHA_RANGE.1 - ALPHA_RANGE.0) * i as f64 / (n_alpha - 1) as f64;
        for j in 0..n_theta {
            let lt = THETA_RANGE.0.ln() + (THETA_RANGE.1 / THETA_RANGE.0).ln() * j as f64 / (n_theta - 1) as f64;
            let v = curve_mse(alpha, lt.exp(), points);
            if v < best_val {
                best_val = v;
                best = (alpha, lt.exp());
            }
        }
    }
    if !best_val.is_finite() {
        return Err(Error::NonConvergence { evals: n_alpha * n_theta });
    }
    let to_alpha = |p: f64| 2.0 / (1.0 + (-p).exp());
    let start = [(best.0 / (2.0 - best.0)).ln(), best.1.ln()];
    let opts = SimplexOptions { max_evals: 4000, f_abs_tol: 1e-24, f_rel_tol: 1e-12, x_tol: 1e-10 };
    let m = nelder_mead_restarted(|p| curve_mse(to_alpha(p[0]), p[1].exp(), points), &start, &[0.1, 0.1], &opts, 3);
    if !m.value.is_finite() {
        return Err(Error::NonConvergence { evals: m.evals });
    }
    Ok(TailShapeFit { alpha: to_alpha(m.x[0]), theta: m.x[1].exp(), mse: m.value })
}

/// `theta*` for a fixed `alpha`; usable with a single point.
pub fn fit_theta_for_alpha(points: &[(f64, f64)], alpha: f64) -> Result<TailShapeFit> {
    check_points(points, 1)?;
    TailShape::new(alpha, 1.0)?;
    let n = 81;
    let (mut best, mut best_val) = (1.0f64, f64::INFINITY);
    for j in 0..n {
        let lt = THETA_RANGE.0.ln() + (THETA_RANGE.1 / THETA_RANGE.0).ln() * j as f64 / (n - 1) as f64;
        let v = curve_mse(alpha, lt.exp(), points);
        if v < best_val {
            best_val = v;
            best = lt;
        }
    }
    let opts = SimplexOptions { max_evals: 2000, f_abs_tol: 1e-24, f_rel_tol: 1e-12, x_tol: 1e-12 };
    let m = nelder_mead_restarted(|p| curve_mse(alpha, p[0].exp(), points), &[best], &[0.05], &opts, 3);
    Ok(TailShapeFit { alpha, theta: m.x[0].exp(), mse: m.value })
}

/// Gaussian-kernel smoothed empirical CDF with Silverman's bandwidth
/// `0.9 min(sd, IQR/1.34) n^(-1/5)`.
#[derive(Debug, Clone)]
pub struct KdeCdf {
    sorted: Vec<f64>,
    bandwidth: f64,
}

/// Kernel contributions beyond this many bandwidths are exactly 0 or 1.
const KERNEL_CUTOFF: f64 = 9.0;

impl KdeCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < MIN_B_SAMPLES {
            return Err(Error::InsufficientData { needed: MIN_B_SAMPLES, got: samples.len() });
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(invalid("samples must be finite"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let sd = stats::sample_variance(&sorted).sqrt();
        let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        if !(spread > 0.0) {
            return Err(Error::Degenerate("samples have zero spread".into()));
        }
        let bandwidth = 0.9 * spread * (sorted.len() as f64).powf(-0.2);
        Ok(Self { sorted, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        // samples below x - cutoff*h contribute 1, above x + cutoff*h contribute 0
        let lo = self.sorted.partition_point(|&v| v < x - KERNEL_CUTOFF * h);
        let hi = self.sorted.partition_point(|&v| v <= x + KERNEL_CUTOFF * h);
        let mut acc = lo as f64;
        for &v in &self.sorted[lo..hi] {
            acc += 0.5 * erfc(-(x - v) / (h * std::f64::consts::SQRT_2));
        }
        acc / self.sorted.len() as f64
    }
}

pub fn kde_cdf(samples: &[f64]) -> Result<KdeCdf> {
    KdeCdf::new(samples)
}

/// Sum of squared differences between the stdNTS CDF at `b` and the
/// smoothed empirical CDF values `emp` at the sample points `x`.
pub fn fit_b_objective(x: &[f64], emp: &[f64], shape: TailShape, b: f64, grid_size: usize) -> Result<f64> {
    let table = stdnts_table(shape, b, grid_size)?;
    Ok(x.iter().zip(emp).map(|(&x, &e)| (table.cdf_at(x) - e).powi(2)).sum())
}

pub fn stdnts_table(shape: TailShape, b: f64, grid_size: usize) -> Result<TabulatedCdf> {
    let p = StdNtsParams::with_shape(shape, b)?;
    build_cdf(&p, 0.0, 1.0, false, grid_size)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BFit {
    pub b: f64,
    pub objective: f64,
    pub evaluations: usize,
}

/// `B` minimizing `sum_k (F(x_k; alpha, theta, B) - F_emp(x_k))^2` over the
/// sample points: an 11-point scan of `[-1, 1]` brackets the minimum, then
/// golden-section search refines it to `1e-4`.
pub fn fit_b(residuals: &[f64], alpha: f64, theta: f64, grid_size: Option<usize>) -> Result<BFit> {
    let shape = TailShape::new(alpha, theta)?;
    let kde = KdeCdf::new(residuals)?;
    let grid_size = grid_size.unwrap_or(DEFAULT_B_TABLE_SIZE);
    let emp: Vec<f64> = residuals.iter().map(|&x| kde.cdf(x)).collect();
    let mut evaluations = 0;
    let mut obj = |b: f64| -> Result<f64> {
        evaluations += 1;
        fit_b_objective(residuals, &emp, shape, b, grid_size)
    };

    let scan: Vec<f64> = (0..=10).map(|j| -1.0 + 0.2 * j as f64).collect();
    let mut values = Vec::with_capacity(scan.len());
    for &b in &scan {
        values.push(obj(b)?);
    }
    let i = (0..scan.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let (mut lo, mut hi) = (scan[i.saturating_sub(1)], scan[(i + 1).min(scan.len() - 1)]);
    let (mut best_b, mut best_v) = (scan[i], values[i]);

    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (obj(x1)?, obj(x2)?);
    while hi - lo > 1e-4 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = obj(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = obj(x2)?;
        }
    }
    for (b, v) in [(x1, f1), (x2, f2)] {
        if v < best_v {
            best_b = b;
            best_v = v;
        }
    }
    Ok(BFit { b: best_b, objective: best_v, evaluations })
}

/// ARIMA(1,1,0) dynamics of `B`: `dB_{t+1} = c_b + a_b dB_t + sigma_b Z`,
/// together with the current level and increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BDynamics {
    pub c_b: f64,
    pub a_b: f64,
    pub sigma_b: f64,
    pub b0: f64,
    pub db0: f64,
}

impl BDynamics {
    /// `sigma_b = 0` is accepted: it freezes `B` at `b0` (the constant-`B`
    /// benchmark model).
    pub fn new(c_b: f64, a_b: f64, sigma_b: f64, b0: f64, db0: f64) -> Result<Self> {
        if !(a_b.abs() < 1.0) {
            return Err(invalid(format!("|a_b| must be below 1, got {a_b}")));
        }
        if !(sigma_b >= 0.0 && sigma_b.is_finite()) {
            return Err(invalid(format!("sigma_b must be non-negative, got {sigma_b}")));
        }
        if !(b0.abs() <= 1.0) {
            return Err(invalid(format!("b0 must lie in [-1, 1], got {b0}")));
        }
        if !c_b.is_finite() || !db0.is_finite() {
            return Err(invalid("c_b and db0 must be finite"));
        }
        Ok(Self { c_b, a_b, sigma_b, b0, db0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub name: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArimaFitReport {
    /// `c_b` (only with a constant), `a_b`, `sigma_b^2`.
    pub estimates: Vec<ParamEstimate>,
    pub log_likelihood: f64,
    pub start_log_likelihood: f64,
    pub unit_root_warning: bool,
    /// Residual variance is numerically zero; standard errors are not
    /// meaningful.
    pub degenerate: bool,
}

impl ArimaFitReport {
    pub fn get(&self, name: &str) -> Option<&ParamEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Exact Gaussian log-likelihood of a stationary AR(1) with constant.
fn ar1_log_likelihood(d: &[f64], c: f64, a: f64, s2: f64) -> f64 {
    if !(s2 > 0.0) || !(a.abs() < 1.0) {
        return f64::NEG_INFINITY;
    }
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let v0 = s2 / (1.0 - a * a);
    let m0 = c / (1.0 - a);
    let mut ll = -0.5 * (ln2pi + v0.ln() + (d[0] - m0).powi(2) / v0);
    let mut rss = 0.0;
    for w in d.windows(2) {
        rss += (w[1] - c - a * w[0]).powi(2);
    }
    ll -= 0.5 * ((d.len() - 1) as f64 * (ln2pi + s2.ln()) + rss / s2);
    ll
}

/// Fits ARIMA(1,1,0) to `series` by exact maximum likelihood on its first
/// differences. Without a constant, `c_b` is fixed at zero.
pub fn fit_arima110(series: &[f64], include_constant: bool) -> Result<(BDynamics, ArimaFitReport)> {
    if series.len() < MIN_ARIMA_LENGTH {
        return Err(Error::InsufficientData { needed: MIN_ARIMA_LENGTH, got: series.len() });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(invalid("series must be finite"));
    }
    let d: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let (b0, db0) = (*series.last().unwrap(), *d.last().unwrap());

    // conditional least squares start
    let (x, y) = (&d[..d.len() - 1], &d[1..]);
    let (a0, c0) = if include_constant {
        let (mx, my) = (stats::mean(x), stats::mean(y));
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
        let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        (a, my - a * mx)
    } else {
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
        (if sxx > 0.0 { sxy / sxx } else { 0.0 }, 0.0)
    };
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - c0 - a0 * u).powi(2)).sum();
    let s2_0 = rss / y.len() as f64;
    let scale = stats::central_moments(&d).0;

    if !(s2_0 > 1e-24 * scale.max(1e-300)) {
        let mut estimates = Vec::new();
        let exact = |name, v: f64| ParamEstimate {
            name,
            estimate: v,
            std_error: 0.0,
            t_statistic: if v == 0.0 { 0.0 } else { v.signum() * f64::INFINITY },
            p_value: if v == 0.0 { 1.0 } else { 0.0 },
        };
        if include_constant {
            estimates.push(exact("c_b", c0));
        }
        estimates.push(exact("a_b", a0));
        estimates.push(exact("sigma_b2", 0.0));
        let a_b = a0.clamp(-0.999_999, 0.999_999);
        let dynamics = BDynamics::new(c0, a_b, 0.0, b0.clamp(-1.0, 1.0), db0)?;
        let report = ArimaFitReport {
            estimates,
            log_likelihood: f64::INFINITY,
            start_log_likelihood: f64::INFINITY,
            unit_root_warning: a0.abs() >= 0.999,
            degenerate: true,
        };
        return Ok((dynamics, report));
    }

    let a_start = a0.clamp(-0.99, 0.99);
    let unpack = |p: &[f64]| -> (f64, f64, f64) {
        let c = if include_constant { p[2] * scale.sqrt() } else { 0.0 };
        (c, p[0].tanh(), p[1].exp() * scale)
    };
    let mut start = vec![a_start.atanh(), (s2_0 / scale).ln()];
    if include_constant {
        start.push(c0 / scale.sqrt());
    }
    let start_ll = ar1_log_likelihood(&d, c0, a_start, s2_0);
    let nll = |p: &[f64]| {
        let (c, a, s2) = unpack(p);
        -ar1_log_likelihood(&d, c, a, s2)
    };
    let opts = SimplexOptions { max_evals: 10_000, f_abs_tol: 1e-10, f_rel_tol: 1e-13, x_tol: 1e-8 };
    let steps = vec![0.05; start.len()];
    let m = nelder_mead_restarted(nll, &start, &steps, &opts, 4);
    if !m.converged {
        return Err(Error::NonConvergence { evals: m.evals });
    }
    let (c, a, s2) = unpack(&m.x);

    // observed information in natural coordinates (c, a, sigma^2)
    let natural: Vec<f64> = if include_constant { vec![c, a, s2] } else { vec![a, s2] };
    let f = |v: &[f64]| -> f64 {
        if include_constant {
            -ar1_log_likelihood(&d, v[0], v[1], v[2])
        } else {
            -ar1_log_likelihood(&d, 0.0, v[0], v[1])
        }
    };
    let steps: Vec<f64> = natural
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let is_var = i == natural.len() - 1;
            if is_var {
                1e-3 * v
            } else if include_constant && i == 0 {
                1e-3 * (s2 / (1.0 - a * a)).sqrt() / (d.len() as f64).sqrt()
            } else {
                1e-4
            }
        })
        .collect();
    let hessian = numerical_hessian(&f, &natural, &steps);
    let cov = invert_symmetric(&hessian).ok_or_else(|| Error::Degenerate("singular information matrix".into()))?;

    let names: &[&'static str] = if include_constant { &["c_b", "a_b", "sigma_b2"] } else { &["a_b", "sigma_b2"] };
    let estimates = names
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let se = cov[i][i].max(0.0).sqrt();
            let t = natural[i] / se;
            ParamEstimate { name, estimate: natural[i], std_error: se, t_statistic: t, p_value: stats::normal_two_sided_p(t) }
        })
        .collect();
    let dynamics = BDynamics::new(c, a, s2.sqrt(), b0.clamp(-1.0, 1.0), db0)?;
    let report = ArimaFitReport {
        estimates,
        log_likelihood: -m.value,
        start_log_likelihood: start_ll,
        unit_root_warning: a.abs() >= 0.999,
        degenerate: false,
    };
    Ok((dynamics, report))
}

/// Central-difference Hessian.
pub(crate) fn numerical_hessian(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut hess = vec![vec![0.0; n]; n];
    let f0 = f(x);
    let at = |di: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, d) in di {
            y[i] += d;
        }
        f(&y)
    };
    for i in 0..n {
        hess[i][i] = (at(&[(i, h[i])]) - 2.0 * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])]) - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

/// Gauss-Jordan inverse with partial pivoting.
pub(crate) fn invert_symmetric(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

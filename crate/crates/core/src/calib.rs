//! Calibration to out-of-the-money option quotes under common random
//! numbers, calibration error estimators, and the paired model-comparison
//! t-test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::garch::GarchParams;
use crate::inversion::TabulatedCdf;
use crate::nts::TailShape;
use crate::optim::{nelder_mead, SimplexOptions};
use crate::pricer::{price_european, simulate_with_table, subordinator_table, MarketState, OptionKind, RandomCube, SimulationOptions};
use crate::stats;
use crate::tails::BDynamics;

/// Quotes at or beyond this many steps are excluded from calibration.
pub const MAX_MATURITY_STEPS: usize = 90;
pub const PENALTY: f64 = 1e12;
pub const LAMBDA_BOUND: f64 = 5.0;
/// Smallest `sigma_b` reachable by the log transform in the full model.
const SIGMA_B_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub strike: f64,
    pub maturity_steps: usize,
    pub kind: OptionKind,
    pub bid: f64,
    pub ask: f64,
}

impl OptionQuote {
    pub fn new(strike: f64, maturity_steps: usize, kind: OptionKind, bid: f64, ask: f64) -> Result<Self> {
        if !(bid >= 0.0 && ask >= bid && ask.is_finite()) {
            return Err(invalid(format!("quote needs 0 <= bid <= ask, got bid={bid}, ask={ask}")));
        }
        if maturity_steps == 0 || !(strike >= 0.0 && strike.is_finite()) {
            return Err(invalid("quote needs a non-negative strike and a maturity of at least one step"));
        }
        Ok(Self { strike, maturity_steps, kind, bid, ask })
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }
}

/// Puts with `K < S0` and calls with `K > S0`, maturity below 90 steps.
pub fn select_otm(quotes: &[OptionQuote], s0: f64) -> Vec<OptionQuote> {
    quotes
        .iter()
        .filter(|q| q.maturity_steps < MAX_MATURITY_STEPS)
        .filter(|q| match q.kind {
            OptionKind::Put => q.strike < s0,
            OptionKind::Call => q.strike > s0,
        })
        .copied()
        .collect()
}

/// `(alpha, theta, a_b, sigma_b, b0, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaVec {
    pub alpha: f64,
    pub theta: f64,
    pub a_b: f64,
    pub sigma_b: f64,
    pub b0: f64,
    pub lambda: f64,
}

impl ThetaVec {
    /// Total distance outside the admissible box; zero when valid.
    pub fn violation(&self) -> f64 {
        let mut v = 0.0;
        v += (-self.alpha).max(0.0) + (self.alpha - 2.0).max(0.0);
        v += (-self.theta).max(0.0);
        v += (self.a_b.abs() - 1.0).max(0.0) + (self.b0.abs() - 1.0).max(0.0);
        v += (-self.sigma_b).max(0.0) + (self.lambda.abs() - LAMBDA_BOUND).max(0.0);
        let edge = (self.alpha <= 0.0 || self.alpha >= 2.0 || self.theta <= 0.0 || self.a_b.abs() >= 1.0) as u8 as f64;
        let finite = [self.alpha, self.theta, self.a_b, self.sigma_b, self.b0, self.lambda].iter().all(|x| x.is_finite());
        if !finite {
            return f64::INFINITY;
        }
        v + edge * 1e-3
    }

    pub fn dynamics(&self) -> Result<BDynamics> {
        BDynamics::new(0.0, self.a_b, self.sigma_b, self.b0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Stochastic `B` following ARIMA(1,1,0).
    Stot,
    /// Constant `B` (`a_b = sigma_b = 0`).
    GarchNts,
}

/// Model prices of `quotes`, all read off one simulated cube.
pub fn model_prices(
    theta_vec: &ThetaVec,
    quotes: &[OptionQuote],
    randoms: &RandomCube,
    g: &GarchParams,
    mkt: &MarketState,
    opts: &SimulationOptions,
) -> Result<Vec<f64>> {
    let shape = TailShape::new(theta_vec.alpha, theta_vec.theta)?;
    let table = subordinator_table(shape, opts.table_grid)?;
    prices_with_table(theta_vec, shape, &table, quotes, randoms, g, mkt, opts)
}

#[allow(clippy::too_many_arguments)]
fn prices_with_table(
    theta_vec: &ThetaVec,
    shape: TailShape,
    table: &TabulatedCdf,
    quotes: &[OptionQuote],
    randoms: &RandomCube,
    g: &GarchParams,
    mkt: &MarketState,
    opts: &SimulationOptions,
) -> Result<Vec<f64>> {
    let mkt = MarketState { lambda: theta_vec.lambda, ..*mkt };
    let cube = simulate_with_table(randoms, &theta_vec.dynamics()?, g, &mkt, shape, table, opts)?;
    quotes
        .iter()
        .map(|q| price_european(&cube, q.strike, q.maturity_steps, mkt.r, q.kind).map(|p| p.0))
        .collect()
}

/// Sum of squared differences between model and mid prices, or a penalty of
/// `1e12` scaled by the violation when `theta_vec` is inadmissible or the
/// innovation mgf diverges on some path.
pub fn objective(
    theta_vec: &ThetaVec,
    quotes: &[OptionQuote],
    randoms: &RandomCube,
    g: &GarchParams,
    mkt: &MarketState,
    opts: &SimulationOptions,
) -> f64 {
    let v = theta_vec.violation();
    if v > 0.0 {
        return PENALTY * (1.0 + v.min(1e6));
    }
    match model_prices(theta_vec, quotes, randoms, g, mkt, opts) {
        Ok(p) => sse(&p, quotes),
        Err(e) => penalty_for(&e, theta_vec.theta),
    }
}

fn sse(prices: &[f64], quotes: &[OptionQuote]) -> f64 {
    prices.iter().zip(quotes).map(|(p, q)| (p - q.mid()).powi(2)).sum()
}

fn penalty_for(e: &Error, theta: f64) -> f64 {
    match e {
        Error::MgfDivergence { margin, .. } => PENALTY * (1.0 + (margin.abs() / theta).min(1e6)),
        _ => PENALTY * 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibOptions {
    pub sim: SimulationOptions,
    /// Evaluation budget per simplex run.
    pub max_evals: usize,
    /// Perturbed restarts after the initial run.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CalibOptions {
    fn default() -> Self {
        Self { sim: SimulationOptions::default(), max_evals: 1500, restarts: 2, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibResult {
    pub theta_vec: ThetaVec,
    pub objective: f64,
    pub start_objective: f64,
    pub n_quotes: usize,
    pub model_prices: Vec<f64>,
    pub evals: usize,
    /// False when a simplex run stopped on its evaluation budget.
    pub converged: bool,
}

/// Unconstrained coordinates for the simplex search.
struct Transform {
    model: ModelKind,
}

impl Transform {
    fn encode(&self, t: &ThetaVec) -> Vec<f64> {
        let alpha = t.alpha.clamp(1e-9, 2.0 - 1e-9);
        let mut raw = vec![(alpha / (2.0 - alpha)).ln(), t.theta.ln()];
        if self.model == ModelKind::Stot {
            raw.push(t.a_b.clamp(-0.999_999, 0.999_999).atanh());
            raw.push(t.sigma_b.max(SIGMA_B_FLOOR).ln());
        }
        raw.push(t.b0.clamp(-0.999_999, 0.999_999).atanh());
        raw.push((t.lambda / LAMBDA_BOUND).clamp(-0.999_999, 0.999_999).atanh());
        raw
    }

    fn decode(&self, p: &[f64]) -> ThetaVec {
        let alpha = 2.0 / (1.0 + (-p[0]).exp());
        let theta = p[1].exp();
        let (a_b, sigma_b, rest) = match self.model {
            ModelKind::Stot => (p[2].tanh(), p[3].exp(), &p[4..]),
            ModelKind::GarchNts => (0.0, 0.0, &p[2..]),
        };
        ThetaVec { alpha, theta, a_b, sigma_b, b0: rest[0].tanh(), lambda: LAMBDA_BOUND * rest[1].tanh() }
    }
}

/// Calibrates `Theta` to the mids of `quotes` by simplex search on
/// transformed coordinates, holding `randoms` fixed. The constant-`B` model
/// pins `a_b = sigma_b = 0`. After the first run, `restarts` further runs
/// start from seeded perturbations of the best point; the best is kept.
pub fn calibrate(
    quotes: &[OptionQuote],
    randoms: &RandomCube,
    g: &GarchParams,
    mkt: &MarketState,
    start: &ThetaVec,
    model: ModelKind,
    opts: &CalibOptions,
) -> Result<CalibResult> {
    if quotes.is_empty() {
        return Err(invalid("no quotes to calibrate to"));
    }
    if let Some(q) = quotes.iter().find(|q| q.maturity_steps > randoms.steps) {
        return Err(Error::MaturityOutOfRange { maturity: q.maturity_steps, horizon: randoms.steps });
    }
    let start = match model {
        ModelKind::Stot => *start,
        ModelKind::GarchNts => ThetaVec { a_b: 0.0, sigma_b: 0.0, ..*start },
    };
    if start.violation() > 0.0 {
        return Err(invalid(format!("start point outside bounds: {start:?}")));
    }
    mkt.validate()?;
    let start_objective = objective(&start, quotes, randoms, g, mkt, &opts.sim);

    let tr = Transform { model };
    let f = |p: &[f64]| objective(&tr.decode(p), quotes, randoms, g, mkt, &opts.sim);
    let simplex = SimplexOptions { max_evals: opts.max_evals, f_abs_tol: 1e-14, f_rel_tol: 1e-9, x_tol: 1e-5 };
    let x0 = tr.encode(&start);
    let steps = vec![0.1; x0.len()];
    let mut best = nelder_mead(f, &x0, &steps, &simplex);
    let mut evals = best.evals;
    let mut converged = best.converged;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let x: Vec<f64> = best.x.iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
        let m = nelder_mead(f, &x, &steps, &simplex);
        evals += m.evals;
        converged &= m.converged;
        if m.value < best.value {
            best = m;
        }
    }

    let (theta_vec, value) = if best.value <= start_objective { (tr.decode(&best.x), best.value) } else { (start, start_objective) };
    let model_prices = model_prices(&theta_vec, quotes, randoms, g, mkt, &opts.sim).unwrap_or_default();
    Ok(CalibResult {
        theta_vec,
        objective: value,
        start_objective,
        n_quotes: quotes.len(),
        model_prices,
        evals,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub aae: f64,
    pub ape: f64,
    pub arpe: f64,
    pub rmsre: f64,
    /// `|P_n - P^_n| / mean(P)`.
    pub ape_errors: Vec<f64>,
    /// `|P_n - P^_n| / P_n`.
    pub arpe_errors: Vec<f64>,
    pub n: usize,
}

pub fn error_report(model_prices: &[f64], market_prices: &[f64]) -> Result<ErrorReport> {
    if model_prices.len() != market_prices.len() {
        return Err(Error::LengthMismatch(model_prices.len(), market_prices.len()));
    }
    if market_prices.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if let Some((index, &price)) = market_prices.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
        return Err(Error::NonPositivePrice { index, price });
    }
    let n = market_prices.len() as f64;
    let mean_price = market_prices.iter().sum::<f64>() / n;
    let abs: Vec<f64> = model_prices.iter().zip(market_prices).map(|(m, p)| (p - m).abs()).collect();
    let aae = abs.iter().sum::<f64>() / n;
    let ape_errors: Vec<f64> = abs.iter().map(|e| e / mean_price).collect();
    let arpe_errors: Vec<f64> = abs.iter().zip(market_prices).map(|(e, p)| e / p).collect();
    let arpe = arpe_errors.iter().sum::<f64>() / n;
    let rmsre = (arpe_errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    Ok(ErrorReport { aae, ape: aae / mean_price, arpe, rmsre, ape_errors, arpe_errors, n: market_prices.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ape,
    Arpe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    /// `mean(e_nts - e_stot)`.
    pub mean_diff: f64,
    pub t_statistic: f64,
    /// One-sided p-value of `H0: mu_nts - mu_stot <= 0`.
    pub p_value: f64,
}

/// Paired one-sided t-test on per-option error differences
/// `e_nts(n) - e_stot(n)` with `N - 1` degrees of freedom.
///
/// Identical error vectors give `t = 0`, `p = 0.5` by convention; a constant
/// non-zero difference has no sampling variance and is rejected as
/// degenerate.
pub fn compare_models(errors_nts: &[f64], errors_stot: &[f64]) -> Result<TestResult> {
    if errors_nts.len() != errors_stot.len() {
        return Err(Error::LengthMismatch(errors_nts.len(), errors_stot.len()));
    }
    if errors_nts.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: errors_nts.len() });
    }
    let d: Vec<f64> = errors_nts.iter().zip(errors_stot).map(|(a, b)| a - b).collect();
    let mean_diff = stats::mean(&d);
    if d.iter().all(|&v| v == 0.0) {
        return Ok(TestResult { mean_diff: 0.0, t_statistic: 0.0, p_value: 0.5 });
    }
    let sd = stats::sample_variance(&d).sqrt();
    if !(sd > 1e-15 * mean_diff.abs()) {
        return Err(Error::Degenerate("error differences have zero variance".into()));
    }
    let n = d.len() as f64;
    let t = mean_diff / (sd / n.sqrt());
    Ok(TestResult { mean_diff, t_statistic: t, p_value: stats::student_t_sf(t, n - 1.0) })
}

/// [`compare_models`] on the per-option errors of two reports.
pub fn compare_reports(nts: &ErrorReport, stot: &ErrorReport, metric: Metric) -> Result<TestResult> {
    match metric {
        Metric::Ape => compare_models(&nts.ape_errors, &stot.ape_errors),
        Metric::Arpe => compare_models(&nts.arpe_errors, &stot.arpe_errors),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn q(strike: f64, t: usize, kind: OptionKind) -> OptionQuote {
        OptionQuote::new(strike, t, kind, 0.01, 0.02).unwrap()
    }

    #[test]
    fn otm_selection() {
        let chain = [
            q(100.0, 30, OptionKind::Call),
            q(90.0, 30, OptionKind::Put),
            q(110.0, 30, OptionKind::Call),
            q(110.0, 30, OptionKind::Put),
            q(90.0, 30, OptionKind::Call),
            q(95.0, 90, OptionKind::Put),
            q(95.0, 89, OptionKind::Put),
            q(100.0, 10, OptionKind::Put),
        ];
        let sel = select_otm(&chain, 100.0);
        assert_eq!(sel, vec![chain[1], chain[2], chain[6]]);
        assert!(OptionQuote::new(1.0, 1, OptionKind::Call, 0.2, 0.1).is_err());
        assert_eq!(chain[0].mid(), 0.015);
    }

    #[test]
    fn estimators_on_toy_vectors() {
        let r = error_report(&[1.1, 1.8], &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(r.aae, 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(r.ape, 0.10, epsilon = 1e-15);
        assert_abs_diff_eq!(r.arpe, 0.10, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rmsre, 0.10, epsilon = 1e-15);
        let r = error_report(&[3.0], &[2.0]).unwrap();
        assert_eq!((r.aae, r.ape, r.arpe, r.rmsre), (1.0, 0.5, 0.5, 0.5));
        let r = error_report(&[2.0, 3.0], &[2.0, 3.0]).unwrap();
        assert_eq!((r.aae, r.ape, r.arpe, r.rmsre), (0.0, 0.0, 0.0, 0.0));
        assert!(matches!(error_report(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(error_report(&[1.0, 1.0], &[1.0, 0.0]), Err(Error::NonPositivePrice { index: 1, .. })));
    }

    #[test]
    fn t_test_conventions() {
        let t = compare_models(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!((t.t_statistic, t.p_value), (0.0, 0.5));
        let t = compare_models(&[0.3, 0.5, 0.4], &[0.1, 0.2, 0.3]).unwrap();
        assert!(t.t_statistic > 0.0 && t.p_value < 0.5);
        assert!(matches!(compare_models(&[0.01; 5], &[0.0; 5]), Err(Error::Degenerate(_))));
        assert!(compare_models(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn transform_round_trip() {
        let t = ThetaVec { alpha: 0.4638, theta: 0.1109, a_b: 0.2513, sigma_b: 0.0317, b0: -0.6584, lambda: 0.5304 };
        let tr = Transform { model: ModelKind::Stot };
        let back = tr.decode(&tr.encode(&t));
        for (a, b) in [(t.alpha, back.alpha), (t.theta, back.theta), (t.a_b, back.a_b), (t.sigma_b, back.sigma_b), (t.b0, back.b0), (t.lambda, back.lambda)] {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let tr = Transform { model: ModelKind::GarchNts };
        let back = tr.decode(&tr.encode(&t));
        assert_eq!((back.a_b, back.sigma_b), (0.0, 0.0));
        assert_eq!(tr.encode(&t).len(), 4);
    }

    #[test]
    fn violation_detects_bounds() {
        let ok = ThetaVec { alpha: 1.0, theta: 1.0, a_b: 0.0, sigma_b: 0.0, b0: 0.0, lambda: 0.0 };
        assert_eq!(ok.violation(), 0.0);
        assert!(ThetaVec { alpha: 2.5, ..ok }.violation() > 0.0);
        assert!(ThetaVec { lambda: 6.0, ..ok }.violation() > 0.0);
        assert!(ThetaVec { theta: f64::NAN, ..ok }.violation().is_infinite());
    }
}

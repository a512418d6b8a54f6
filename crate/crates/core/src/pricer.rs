//! Risk-neutral StoT-NTS scenario simulation and European option prices.
//!
//! For path `m` and step `n = 1..T`:
//!
//! ```text
//! tau   = F_TS^{-1}(u)                                    subordinator
//! B_n   = B_{n-1} + c_b + a_b (B_{n-1} - B_{n-2}) + sigma_b z,  B_0 = B_1 = b0
//! eta   = B sqrt(2 theta/(2 - alpha)) (tau - 1) + x sqrt((1 - B^2) tau)
//! sig_n = sqrt(kappa + xi sig_{n-1}^2 (eta_{n-1} - lambda)^2 + zeta sig_{n-1}^2)
//! y     = r - omega + sig eta,   omega = log E[exp(sig eps)], eps ~ stdNTS(alpha, theta, B_n)
//! S_n   = S_0 exp(y_1 + ... + y_n)
//! ```

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::garch::GarchParams;
use crate::inversion::{build_cdf, TabulatedCdf, DEFAULT_GRID_SIZE};
use crate::nts::{StdNtsParams, TailShape};
use crate::tails::BDynamics;

/// `B` is kept strictly inside `[-1, 1]` after each update.
pub const B_CLAMP: f64 = 0.999_999;

/// Common random numbers for one simulation: `M x T` arrays stored
/// row-major (path-major).
#[derive(Debug, Clone, PartialEq)]
pub struct RandomCube {
    pub paths: usize,
    pub steps: usize,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub seed: u64,
}

/// Draws `u`, `x`, `z` for `paths x steps`. Every `(path, array)` pair reads
/// its own ChaCha8 stream, so entries do not depend on generation order.
pub fn generate_randoms(paths: usize, steps: usize, seed: u64) -> Result<RandomCube> {
    if paths == 0 || steps == 0 {
        return Err(invalid("paths and steps must be at least 1"));
    }
    let n = paths * steps;
    let (mut u, mut x, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for m in 0..paths {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((m as u64) << 2) | k);
            rng
        };
        let mut ru = stream(0);
        // 53 random bits, offset by half an ulp: strictly inside (0, 1)
        u.extend((0..steps).map(|_| ((ru.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)));
        let mut rx = stream(1);
        x.extend((0..steps).map(|_| rx.sample::<f64, _>(StandardNormal)));
        let mut rz = stream(2);
        z.extend((0..steps).map(|_| rz.sample::<f64, _>(StandardNormal)));
    }
    Ok(RandomCube { paths, steps, u, x, z, seed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub s0: f64,
    pub sigma0: f64,
    pub eps0: f64,
    pub y0: f64,
    /// Daily risk-free rate.
    pub r: f64,
    /// Daily dividend rate; enters the drift only with `use_dividend`.
    pub d: f64,
    pub lambda: f64,
}

impl MarketState {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) || !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(invalid("s0 and sigma0 must be positive"));
        }
        if ![self.eps0, self.y0, self.r, self.d, self.lambda].iter().all(|v| v.is_finite()) {
            return Err(invalid("market state must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// Use `r - d` instead of `r` in the drift.
    pub use_dividend: bool,
    /// Grid size of the subordinator CDF table.
    pub table_grid: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { use_dividend: false, table_grid: DEFAULT_GRID_SIZE }
    }
}

/// Simulated `M x T` arrays, row-major; column `n - 1` holds step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCube {
    pub paths: usize,
    pub steps: usize,
    pub tau: Vec<f64>,
    pub b: Vec<f64>,
    pub eta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub omega: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

impl ScenarioCube {
    #[inline]
    pub fn index(&self, m: usize, n: usize) -> usize {
        debug_assert!(n >= 1 && n <= self.steps);
        m * self.steps + n - 1
    }

    /// Prices at step `n` across all paths.
    pub fn prices_at(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.paths).map(move |m| self.s[self.index(m, n)])
    }

    /// Long-format CSV: `m,n,tau,b,eta,sigma,y,s` with 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "m,n,tau,b,eta,sigma,y,s")?;
        for m in 0..self.paths {
            for n in 1..=self.steps {
                let i = self.index(m, n);
                writeln!(
                    w,
                    "{m},{n},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    self.tau[i], self.b[i], self.eta[i], self.sigma[i], self.y[i], self.s[i]
                )?;
            }
        }
        Ok(())
    }
}

/// CDF table of the unit-mean tempered stable subordinator.
pub fn subordinator_table(shape: TailShape, grid_size: usize) -> Result<TabulatedCdf> {
    let sd = shape.subordinator_variance().sqrt();
    build_cdf(&shape, 1.0, sd, true, grid_size)
}

/// Subordinator tables keyed by `(alpha, theta)`, reused across calls.
#[derive(Debug, Default)]
pub struct TableCache {
    tables: HashMap<(u64, u64, usize), Arc<TabulatedCdf>>,
}

const CACHE_LIMIT: usize = 64;

impl TableCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, shape: TailShape, grid_size: usize) -> Result<Arc<TabulatedCdf>> {
        let key = (shape.alpha().to_bits(), shape.theta().to_bits(), grid_size);
        if let Some(t) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(subordinator_table(shape, grid_size)?);
        if self.tables.len() >= CACHE_LIMIT {
            self.tables.clear();
        }
        self.tables.insert(key, t.clone());
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// Tail levels `B_{m,n}` driven by the `z` array.
pub fn simulate_b_paths(randoms: &RandomCube, dynamics: &BDynamics) -> Vec<f64> {
    let t = randoms.steps;
    let mut out = Vec::with_capacity(randoms.paths * t);
    for m in 0..randoms.paths {
        let z = &randoms.z[m * t..(m + 1) * t];
        let (mut prev, mut cur) = (dynamics.b0, dynamics.b0);
        out.push(cur);
        for &zn in &z[1..] {
            let next = (cur + dynamics.c_b + dynamics.a_b * (cur - prev) + dynamics.sigma_b * zn).clamp(-B_CLAMP, B_CLAMP);
            prev = cur;
            cur = next;
            out.push(cur);
        }
    }
    out
}

/// `tau_{m,n} = F^{-1}(u_{m,n})` for the subordinator with shape `(alpha, theta)`.
pub fn simulate_subordinator(u: &[f64], alpha: f64, theta: f64) -> Result<Vec<f64>> {
    let table = subordinator_table(TailShape::new(alpha, theta)?, DEFAULT_GRID_SIZE)?;
    subordinator_draws(u, &table)
}

pub fn subordinator_draws(u: &[f64], table: &TabulatedCdf) -> Result<Vec<f64>> {
    u.iter().map(|&p| table.quantile(p)).collect()
}

pub fn simulate_riskneutral(
    randoms: &RandomCube,
    dynamics: &BDynamics,
    g: &GarchParams,
    mkt: &MarketState,
    alpha: f64,
    theta: f64,
) -> Result<ScenarioCube> {
    let opts = SimulationOptions::default();
    let shape = TailShape::new(alpha, theta)?;
    let table = subordinator_table(shape, opts.table_grid)?;
    simulate_with_table(randoms, dynamics, g, mkt, shape, &table, &opts)
}

/// Scenario simulation with a prebuilt subordinator table.
pub fn simulate_with_table(
    randoms: &RandomCube,
    dynamics: &BDynamics,
    g: &GarchParams,
    mkt: &MarketState,
    shape: TailShape,
    table: &TabulatedCdf,
    opts: &SimulationOptions,
) -> Result<ScenarioCube> {
    mkt.validate()?;
    let (paths, t) = (randoms.paths, randoms.steps);
    let n_all = paths * t;
    let b = simulate_b_paths(randoms, dynamics);
    let mut tau = Vec::with_capacity(n_all);
    let mut eta = Vec::with_capacity(n_all);
    let mut sigma = Vec::with_capacity(n_all);
    let mut omega = Vec::with_capacity(n_all);
    let mut y = Vec::with_capacity(n_all);
    let mut s = Vec::with_capacity(n_all);
    let drift = if opts.use_dividend { mkt.r - mkt.d } else { mkt.r };

    for m in 0..paths {
        let (mut sig_prev, mut eta_prev, mut log_s) = (mkt.sigma0, mkt.eps0, mkt.s0.ln());
        for n in 1..=t {
            let i = m * t + n - 1;
            let p = StdNtsParams::with_shape(shape, b[i])?;
            let tau_i = table.quantile(randoms.u[i])?;
            let eta_i = p.from_subordinator(tau_i, randoms.x[i]);
            let sig = g.next_sigma(sig_prev, eta_prev - mkt.lambda);
            let w = p.log_mgf(sig).map_err(|e| match e {
                Error::MgfDivergence { sigma, b, margin, .. } => {
                    Error::MgfDivergence { sigma, b, margin, location: Some((m, n)) }
                }
                other => other,
            })?;
            let y_i = drift - w + sig * eta_i;
            log_s += y_i;
            tau.push(tau_i);
            eta.push(eta_i);
            sigma.push(sig);
            omega.push(w);
            y.push(y_i);
            s.push(log_s.exp());
            sig_prev = sig;
            eta_prev = eta_i;
        }
    }
    Ok(ScenarioCube { paths, steps: t, tau, b, eta, sigma, omega, y, s })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionKind {
    Call,
    Put,
}

/// Discounted mean payoff at `maturity_steps` and its Monte-Carlo standard
/// error.
pub fn price_european(
    cube: &ScenarioCube,
    strike: f64,
    maturity_steps: usize,
    r: f64,
    kind: OptionKind,
) -> Result<(f64, f64)> {
    if maturity_steps == 0 || maturity_steps > cube.steps {
        return Err(Error::MaturityOutOfRange { maturity: maturity_steps, horizon: cube.steps });
    }
    let disc = (-r * maturity_steps as f64).exp();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for st in cube.prices_at(maturity_steps) {
        let payoff = match kind {
            OptionKind::Call => (st - strike).max(0.0),
            OptionKind::Put => (strike - st).max(0.0),
        };
        sum += payoff;
        sum2 += payoff * payoff;
    }
    let n = cube.paths as f64;
    let mean = sum / n;
    let var = if cube.paths > 1 { ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok((disc * mean, disc * (var / n).sqrt()))
}

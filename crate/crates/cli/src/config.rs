use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use stot_nts::calib::ThetaVec;
use stot_nts::garch::GarchParams;
use stot_nts::pricer::MarketState;
use stot_nts::tails::BDynamics;

use crate::error::{input, CliError};

pub const MIN_PATHS: usize = 100;

/// A per-step rate: a plain decimal, or a string with a `bp` suffix
/// (`"1.6bp"` = 1.6e-4).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rate(pub f64);

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Rate;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string like \"1.6bp\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rate, E> {
                Ok(Rate(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rate, E> {
                Ok(Rate(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rate, E> {
                Ok(Rate(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rate, E> {
                parse_rate(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

pub fn parse_rate(s: &str) -> Result<Rate, String> {
    let s = s.trim();
    let (num, scale) = match s.strip_suffix("bp") {
        Some(n) => (n.trim(), 1e-4),
        None => (s, 1.0),
    };
    num.parse::<f64>().map(|v| Rate(v * scale)).map_err(|_| format!("invalid rate {s:?}"))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub returns: Option<PathBuf>,
    pub residuals: Option<PathBuf>,
    pub chain: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub calendar: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GarchSection {
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    pub kappa: f64,
    pub xi: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    #[serde(default = "one")]
    pub s0: f64,
    pub sigma0: f64,
    pub eps0: f64,
    #[serde(default)]
    pub y0: f64,
    pub r: Rate,
    #[serde(default)]
    pub d: Rate,
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsSection {
    pub alpha: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default)]
    pub c_b: f64,
    pub a_b: f64,
    pub sigma_b: f64,
    pub b0: f64,
    #[serde(default)]
    pub db0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub paths: usize,
    pub steps: usize,
    pub table_grid: usize,
    pub use_dividend: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { paths: 10_000, steps: 90, table_grid: 2048, use_dividend: false }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub window: usize,
    pub step: usize,
    pub b_table_grid: usize,
    pub include_constant: bool,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { window: 1000, step: 1, b_table_grid: 512, include_constant: false }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingSection {
    pub strikes: Vec<f64>,
    pub maturities: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSection {
    pub alpha: f64,
    pub theta: f64,
    pub a_b: f64,
    pub sigma_b: f64,
    pub b0: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub max_evals: usize,
    pub restarts: usize,
    pub table_grid: usize,
    pub start: Option<ThetaSection>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self { max_evals: 1500, restarts: 3, table_grid: 512, start: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input: InputPaths,
    pub garch: Option<GarchSection>,
    pub market: Option<MarketSection>,
    pub tails: Option<TailsSection>,
    pub dynamics: Option<DynamicsSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub pricing: PricingSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    /// Hex SHA-256 of the config file bytes; `none` without a file.
    #[serde(skip)]
    pub hash: String,
}

fn one() -> f64 {
    1.0
}

impl RunConfig {
    /// Parses `path`; relative input paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| input(format!("{}: not UTF-8", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        cfg.hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        let base = path.parent().unwrap_or(Path::new("."));
        let inp = &mut cfg.input;
        for p in [&mut inp.returns, &mut inp.residuals, &mut inp.chain, &mut inp.prices, &mut inp.calendar].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn empty() -> Self {
        Self { hash: "none".into(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let sim = &self.simulation;
        if sim.paths < MIN_PATHS {
            return Err(input(format!("simulation.paths must be at least {MIN_PATHS}, got {}", sim.paths)));
        }
        if sim.steps == 0 {
            return Err(input("simulation.steps must be at least 1"));
        }
        if self.fit.step == 0 {
            return Err(input("fit.step must be at least 1"));
        }
        let inp = &self.input;
        for p in [&inp.returns, &inp.residuals, &inp.chain, &inp.prices, &inp.calendar].into_iter().flatten() {
            if !p.exists() {
                return Err(input(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn garch(&self) -> Result<GarchParams, CliError> {
        let g = self.garch.as_ref().ok_or_else(|| input("missing [garch] section"))?;
        Ok(GarchParams::new(g.c, g.a, g.b, g.kappa, g.xi, g.zeta)?)
    }

    pub fn market(&self) -> Result<MarketState, CliError> {
        let m = self.market.as_ref().ok_or_else(|| input("missing [market] section"))?;
        let mkt = MarketState {
            s0: m.s0,
            sigma0: m.sigma0,
            eps0: m.eps0,
            y0: m.y0,
            r: m.r.0,
            d: m.d.0,
            lambda: m.lambda,
        };
        mkt.validate()?;
        Ok(mkt)
    }

    pub fn tails(&self) -> Result<TailsSection, CliError> {
        self.tails.ok_or_else(|| input("missing [tails] section"))
    }

    pub fn dynamics(&self) -> Result<BDynamics, CliError> {
        let d = self.dynamics.ok_or_else(|| input("missing [dynamics] section"))?;
        Ok(BDynamics::new(d.c_b, d.a_b, d.sigma_b, d.b0, d.db0)?)
    }

    /// Calibration start: `[calibration.start]`, else assembled from
    /// `[tails]`, `[dynamics]` and `market.lambda`.
    pub fn calibration_start(&self) -> Result<ThetaVec, CliError> {
        if let Some(s) = self.calibration.start {
            return Ok(ThetaVec { alpha: s.alpha, theta: s.theta, a_b: s.a_b, sigma_b: s.sigma_b, b0: s.b0, lambda: s.lambda });
        }
        let t = self.tails()?;
        let d = self.dynamics.ok_or_else(|| input("missing [calibration.start] or [dynamics] section"))?;
        let lambda = self.market.as_ref().map_or(0.0, |m| m.lambda);
        Ok(ThetaVec { alpha: t.alpha, theta: t.theta, a_b: d.a_b, sigma_b: d.sigma_b, b0: d.b0, lambda })
    }
}

//! Tempered stable subordinator, normal tempered stable (NTS) law and the
//! standard NTS parameterization `stdNTS(alpha, theta; B)`.
//!
//! An NTS variable is `X = mu - beta + beta*T + gamma*sqrt(T)*W` where `T` is a
//! unit-mean tempered stable subordinator and `W ~ N(0, 1)` is independent.
//! Setting `beta = B*sqrt(2 theta/(2 - alpha))`, `gamma = sqrt(1 - B^2)` and
//! `mu = 0` gives a zero-mean, unit-variance law whose asymmetry is carried by
//! the single parameter `B in [-1, 1]`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::garch::GarchParams;
use crate::inversion::CharacteristicFunction;

/// Relative margin below which the mgf is treated as non-existent.
const MGF_MARGIN: f64 = 1e-12;

/// Stability index and tempering rate `(alpha, theta)` shared by the
/// subordinator and every NTS law built on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailShape {
    alpha: f64,
    theta: f64,
}

impl TailShape {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid(format!("theta must be positive, got {theta}")));
        }
        Ok(Self { alpha, theta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `2 theta^(1 - alpha/2) / alpha`.
    fn scale(&self) -> f64 {
        2.0 * self.theta.powf(1.0 - 0.5 * self.alpha) / self.alpha
    }

    /// `(theta + z)^(alpha/2) - theta^(alpha/2)` on the principal branch.
    fn power_increment(&self, z: Complex64) -> Complex64 {
        let a = 0.5 * self.alpha;
        self.theta.powf(a) * cexpm1(a * clog1p(z / self.theta))
    }

    /// Characteristic function of the subordinator, `E[exp(iuT)]`.
    pub fn subordinator_chf(&self, u: f64) -> Complex64 {
        (-self.scale() * self.power_increment(Complex64::new(0.0, -u))).exp()
    }

    /// Laplace transform of the subordinator, `E[exp(-sT)]`, for `Re(s) > -theta`.
    pub fn subordinator_laplace(&self, s: Complex64) -> Complex64 {
        (-self.scale() * self.power_increment(s)).exp()
    }

    /// Variance of the unit-mean subordinator, `(2 - alpha)/(2 theta)`.
    pub fn subordinator_variance(&self) -> f64 {
        (2.0 - self.alpha) / (2.0 * self.theta)
    }
}

impl CharacteristicFunction for TailShape {
    fn chf(&self, u: f64) -> Complex64 {
        self.subordinator_chf(u)
    }

    fn laplace(&self, s: Complex64) -> Option<Complex64> {
        Some(self.subordinator_laplace(s))
    }

    fn laplace_growth(&self) -> f64 {
        0.5 * self.alpha
    }
}

/// Characteristic function of the tempered stable subordinator.
pub fn ts_subordinator_chf(u: f64, alpha: f64, theta: f64) -> Result<Complex64> {
    Ok(TailShape::new(alpha, theta)?.subordinator_chf(u))
}

/// First four moments of a law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Parameters `(alpha, theta, beta, gamma, mu)` of an NTS law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtsParams {
    shape: TailShape,
    beta: f64,
    gamma: f64,
    mu: f64,
}

impl NtsParams {
    pub fn new(alpha: f64, theta: f64, beta: f64, gamma: f64, mu: f64) -> Result<Self> {
        let shape = TailShape::new(alpha, theta)?;
        if !beta.is_finite() || !mu.is_finite() {
            return Err(invalid("beta and mu must be finite"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self { shape, beta, gamma, mu })
    }

    pub fn shape(&self) -> TailShape {
        self.shape
    }
    pub fn alpha(&self) -> f64 {
        self.shape.alpha
    }
    pub fn theta(&self) -> f64 {
        self.shape.theta
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `log E[exp(iuX)]`, valid for complex `u` wherever the exponential
    /// moment exists.
    pub fn log_chf(&self, u: Complex64) -> Complex64 {
        let i = Complex64::i();
        let z = -i * self.beta * u + 0.5 * self.gamma * self.gamma * u * u;
        assert!(
            (self.shape.theta + z).re > 0.0,
            "NTS characteristic exponent left the principal branch at u={u}"
        );
        (self.mu - self.beta) * i * u - self.shape.scale() * self.shape.power_increment(z)
    }

    pub fn chf(&self, u: f64) -> Complex64 {
        self.log_chf(Complex64::new(u, 0.0)).exp()
    }

    pub fn moments(&self) -> Result<MomentSet> {
        let (a, t, b, g) = (self.alpha(), self.theta(), self.beta, self.gamma);
        let (b2, g2) = (b * b, g * g);
        let d = 2.0 * g2 * t + (2.0 - a) * b2;
        if d <= 0.0 {
            return Err(invalid("NTS law with beta = gamma = 0 is degenerate"));
        }
        let variance = d / (2.0 * t);
        let skewness =
            b * (2.0 - a) * (6.0 * g2 * t - a * b2 + 4.0 * b2) / ((2.0 * t).sqrt() * d.powf(1.5));
        let excess_kurtosis = (2.0 - a)
            * (a * a * b2 * b2 - 10.0 * a * b2 * b2 - 12.0 * a * b2 * g2 * t
                + 24.0 * b2 * b2
                + 48.0 * b2 * g2 * t
                + 12.0 * g2 * g2 * t * t)
            / (2.0 * t * d * d);
        Ok(MomentSet { mean: self.mu, variance, skewness, excess_kurtosis })
    }
}

impl CharacteristicFunction for NtsParams {
    fn chf(&self, u: f64) -> Complex64 {
        NtsParams::chf(self, u)
    }
}

pub fn nts_chf(u: f64, p: &NtsParams) -> Complex64 {
    p.chf(u)
}

pub fn nts_moments(p: &NtsParams) -> Result<MomentSet> {
    p.moments()
}

/// `stdNTS(alpha, theta; B)`: zero mean, unit variance, asymmetry `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdNtsParams {
    shape: TailShape,
    b: f64,
}

impl StdNtsParams {
    pub fn new(alpha: f64, theta: f64, b: f64) -> Result<Self> {
        Self::with_shape(TailShape::new(alpha, theta)?, b)
    }

    pub fn with_shape(shape: TailShape, b: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&b) {
            return Err(invalid(format!("B must lie in [-1, 1], got {b}")));
        }
        Ok(Self { shape, b })
    }

    pub fn shape(&self) -> TailShape {
        self.shape
    }
    pub fn alpha(&self) -> f64 {
        self.shape.alpha
    }
    pub fn theta(&self) -> f64 {
        self.shape.theta
    }
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `sqrt(2 theta / (2 - alpha))`, the largest admissible `|beta|`.
    pub fn beta_bound(&self) -> f64 {
        (2.0 * self.theta() / (2.0 - self.alpha())).sqrt()
    }

    pub fn beta(&self) -> f64 {
        self.b * self.beta_bound()
    }

    pub fn gamma(&self) -> f64 {
        (1.0 - self.b * self.b).max(0.0).sqrt()
    }

    pub fn to_nts(&self) -> NtsParams {
        NtsParams { shape: self.shape, beta: self.beta(), gamma: self.gamma(), mu: 0.0 }
    }

    pub fn skewness(&self) -> f64 {
        let (a, t, b) = (self.alpha(), self.theta(), self.b);
        let b2 = b * b;
        ((2.0 - a) / (2.0 * t)).sqrt() * b * (3.0 * (1.0 - b2) + (4.0 - a) / (2.0 - a) * b2)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        let (a, t, b) = (self.alpha(), self.theta(), self.b);
        let b2 = b * b;
        let r = b2 / (2.0 - a);
        (2.0 - a) / (2.0 * t)
            * ((a - 4.0) * (a - 6.0) * r * r + ((24.0 - 6.0 * a) * r + 3.0 * (1.0 - b2)) * (1.0 - b2))
    }

    /// Draw assembled from a subordinator value `tau` and an independent
    /// standard normal `x`: `beta*(tau - 1) + gamma*sqrt(tau)*x`.
    pub fn from_subordinator(&self, tau: f64, x: f64) -> f64 {
        self.b * self.beta_bound() * (tau - 1.0) + x * ((1.0 - self.b * self.b).max(0.0) * tau).sqrt()
    }

    /// `log E[exp(sigma * eps)]`.
    pub fn log_mgf(&self, sigma: f64) -> Result<f64> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be non-negative, got {sigma}")));
        }
        let (beta, gamma) = (self.beta(), self.gamma());
        let z = -beta * sigma - 0.5 * gamma * gamma * sigma * sigma;
        let theta = self.theta();
        let margin = theta + z;
        if margin < MGF_MARGIN * theta {
            return Err(Error::MgfDivergence { sigma, b: self.b, margin, location: None });
        }
        let a = 0.5 * self.alpha();
        let increment = theta.powf(a) * (a * (z / theta).ln_1p()).exp_m1();
        Ok(-beta * sigma - self.shape.scale() * increment)
    }
}

impl CharacteristicFunction for StdNtsParams {
    fn chf(&self, u: f64) -> Complex64 {
        self.to_nts().chf(u)
    }
}

pub fn stdnts_from_b(s: &StdNtsParams) -> NtsParams {
    s.to_nts()
}

pub fn stdnts_skewness(s: &StdNtsParams) -> f64 {
    s.skewness()
}

pub fn stdnts_exkurtosis(s: &StdNtsParams) -> f64 {
    s.excess_kurtosis()
}

pub fn log_mgf_stdnts(sigma: f64, s: &StdNtsParams) -> Result<f64> {
    s.log_mgf(sigma)
}

/// Conditional variance of the next conditional variance,
/// `xi^2 (kappa + xi sigma^2 eps^2 + zeta sigma^2)^2 K`, where `K` is the
/// stdNTS excess kurtosis at the current tail level.
pub fn conditional_vol_of_vol(g: &GarchParams, sigma_prev: f64, eps_prev: f64, s: &StdNtsParams) -> f64 {
    let s2 = sigma_prev * sigma_prev;
    let next_var = g.kappa + g.xi * s2 * eps_prev * eps_prev + g.zeta * s2;
    g.xi * g.xi * next_var * next_var * s.excess_kurtosis()
}

/// `log(1 + z)` without cancellation for small `|z|`.
fn clog1p(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
        let im = z.im.atan2(1.0 + z.re);
        Complex64::new(re, im)
    } else {
        (1.0 + z).ln()
    }
}

/// `exp(w) - 1` without cancellation for small `|w|`.
fn cexpm1(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let half = (0.5 * w.im).sin();
        Complex64::new(w.re.exp_m1() * w.im.cos() - 2.0 * half * half, w.re.exp() * w.im.sin())
    } else {
        w.exp() - 1.0
    }
}

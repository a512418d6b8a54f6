//! CDF, density and quantile tables obtained by inverting a characteristic
//! function.
//!
//! Laws on the whole real line are inverted with the Gil-Pelaez formula
//!
//! ```text
//! F(x) = 1/2 - (1/pi) * int_0^inf Im[exp(-iux) phi(u)] / u du
//! ```
//!
//! on a composite Gauss-Kronrod rule whose nodes are shared by every grid
//! point. Non-negative laws that expose a closed-form Laplace transform are
//! inverted along a hyperbolic Bromwich contour instead; its integrand decays
//! exponentially even when `|phi(u)|` decays only like `exp(-c u^(alpha/2))`
//! for small `alpha`.
//!
//! Tables are immutable once built and interpolate with monotone cubic
//! Hermite cells whose node slopes are the inverted densities.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::interp::{hermite, hermite_slope, isotonize, limit_monotone_slopes};
use crate::quad::{self, panel_nodes, Node};

pub const DEFAULT_GRID_SIZE: usize = 2048;
pub const MIN_GRID_SIZE: usize = 256;

/// Largest acceptable quadrature error estimate for a CDF value.
pub const MAX_CDF_ERROR: f64 = 1e-7;
/// The Gil-Pelaez integral is truncated where `|phi(u)|/u` falls below this.
const CHF_CUTOFF: f64 = 1e-14;
/// Probability mass left outside the tabulated support on each side.
const TAIL_MASS: f64 = 1e-8;
/// Grid half-width in units of the standard deviation hint.
const SPAN_STDS: f64 = 12.0;
/// Stretch of the atanh grid map; larger values crowd nodes near the centre.
const GRID_STRETCH: f64 = 0.98;
/// `mu * x` on the Bromwich hyperbola.
const CONTOUR_SCALE: f64 = 6.0;

const TABLE_MAGIC: &[u8; 8] = b"NTSCDF\0\0";
const TABLE_VERSION: u32 = 1;

/// A law described by its characteristic function.
pub trait CharacteristicFunction: Sync {
    /// `E[exp(iuX)]` for real `u`.
    fn chf(&self, u: f64) -> Complex64;

    /// `E[exp(-sX)]` for a law on `[0, inf)`, analytically continued to the
    /// complex plane to the right of its singularities.
    fn laplace(&self, _s: Complex64) -> Option<Complex64> {
        None
    }

    /// Order `rho < 1` such that `|log L(s)|` grows like `|s|^rho` along rays;
    /// sets how far the inversion contour may bend left.
    fn laplace_growth(&self) -> f64 {
        0.0
    }
}

/// Adapter for characteristic functions given as closures.
pub struct ChfFn<F>(pub F);

impl<F: Fn(f64) -> Complex64 + Sync> CharacteristicFunction for ChfFn<F> {
    fn chf(&self, u: f64) -> Complex64 {
        (self.0)(u)
    }
}

/// Monotone CDF table with node densities.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    grid: Vec<f64>,
    cdf_values: Vec<f64>,
    density: Vec<f64>,
}

impl TabulatedCdf {
    /// Assembles a table from raw node values: clamps to `[0, 1]`,
    /// isotonizes and limits the slopes so the interpolant is monotone.
    pub fn from_nodes(grid: Vec<f64>, mut cdf_values: Vec<f64>, mut density: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if n < 2 || cdf_values.len() != n || density.len() != n {
            return Err(invalid("table needs at least two nodes and equal-length columns"));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) || grid.iter().any(|x| !x.is_finite()) {
            return Err(invalid("table grid must be finite and strictly increasing"));
        }
        if cdf_values.iter().chain(&density).any(|v| v.is_nan()) {
            return Err(invalid("table contains NaN"));
        }
        for v in &mut cdf_values {
            *v = v.clamp(0.0, 1.0);
        }
        isotonize(&mut cdf_values);
        limit_monotone_slopes(&grid, &cdf_values, &mut density);
        Ok(Self { grid, cdf_values, density })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf_values
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn support_lo(&self) -> f64 {
        self.grid[0]
    }

    pub fn support_hi(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    fn cell(&self, i: usize, x: f64) -> f64 {
        let g = &self.grid;
        hermite(g[i], g[i + 1], self.cdf_values[i], self.cdf_values[i + 1], self.density[i], self.density[i + 1], x)
    }

    fn cell_slope(&self, i: usize, x: f64) -> f64 {
        let g = &self.grid;
        hermite_slope(g[i], g[i + 1], self.cdf_values[i], self.cdf_values[i + 1], self.density[i], self.density[i + 1], x)
    }

    /// CDF by monotone cubic interpolation; 0 below and 1 above the support.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] {
            return 0.0;
        }
        if x > self.grid[n - 1] {
            return 1.0;
        }
        let j = self.grid.partition_point(|&g| g <= x);
        if j >= n {
            return self.cdf_values[n - 1];
        }
        self.cell(j - 1, x).clamp(self.cdf_values[j - 1], self.cdf_values[j])
    }

    /// Density of the interpolant.
    pub fn density_at(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] || x > self.grid[n - 1] {
            return 0.0;
        }
        let j = self.grid.partition_point(|&g| g <= x).min(n - 1);
        self.cell_slope(j - 1, x).max(0.0)
    }

    /// Inverse of [`cdf_at`](Self::cdf_at) for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(self.quantile_in_range(p))
    }

    pub(crate) fn quantile_in_range(&self, p: f64) -> f64 {
        let n = self.grid.len();
        let j = self.cdf_values.partition_point(|&v| v < p);
        if j == 0 {
            return self.grid[0];
        }
        if j == n {
            return self.grid[n - 1];
        }
        let i = j - 1;
        let (mut lo, mut hi) = (self.grid[i], self.grid[j]);
        let (f0, f1) = (self.cdf_values[i], self.cdf_values[j]);
        let mut x = lo + (hi - lo) * (p - f0) / (f1 - f0);
        for _ in 0..100 {
            let fx = self.cell(i, x) - p;
            if fx.abs() <= 1e-13 {
                break;
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if hi - lo <= 1e-15 * x.abs().max(1e-300) {
                break;
            }
            let slope = self.cell_slope(i, x);
            let newton = x - fx / slope;
            x = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        x
    }

    /// Mean and variance of the interpolated law.
    pub fn moments(&self) -> (f64, f64) {
        // 3-point Gauss-Legendre is exact for x^k * (quadratic density), k <= 2
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            for k in 0..3 {
                let x = c + h * NODES[k];
                let w = WEIGHTS[k] * h * self.cell_slope(i, x);
                m1 += w * x;
                m2 += w * x * x;
            }
        }
        (m1, m2 - m1 * m1)
    }

    /// Writes the table in the versioned little-endian binary layout.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(TABLE_MAGIC)?;
        w.write_all(&TABLE_VERSION.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        w.write_all(&self.support_lo().to_le_bytes())?;
        w.write_all(&self.support_hi().to_le_bytes())?;
        for column in [&self.grid, &self.cdf_values, &self.density] {
            for v in column.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != TABLE_MAGIC {
            return Err(Error::Format("not a CDF table".into()));
        }
        let version = read_u32(&mut r)?;
        if version != TABLE_VERSION {
            return Err(Error::Format(format!("unsupported table version {version}")));
        }
        let _flags = read_u32(&mut r)?;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        if !(2..=1 << 26).contains(&n) {
            return Err(Error::Format(format!("implausible table length {n}")));
        }
        let lo = read_f64(&mut r)?;
        let hi = read_f64(&mut r)?;
        let mut columns = [Vec::new(), Vec::new(), Vec::new()];
        for column in columns.iter_mut() {
            column.reserve(n);
            for _ in 0..n {
                column.push(read_f64(&mut r)?);
            }
        }
        let [grid, cdf_values, density] = columns;
        if grid[0] != lo || grid[n - 1] != hi {
            return Err(Error::Format("support header does not match grid".into()));
        }
        Self::from_nodes(grid, cdf_values, density)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Builds a CDF table for the law with characteristic function `chf`.
///
/// The grid covers at least `mean_hint +- 12 std_hint` (clipped at zero for
/// non-negative laws) and is widened until less than `1e-8` of mass lies
/// outside on either side. Real-line grids are crowded near `mean_hint` by an
/// atanh map; non-negative grids are a node at zero followed by
/// logarithmically spaced nodes, which resolves the sharp left edge of
/// subordinators.
pub fn build_cdf(
    chf: &dyn CharacteristicFunction,
    mean_hint: f64,
    std_hint: f64,
    nonneg_support: bool,
    grid_size: usize,
) -> Result<TabulatedCdf> {
    if !(std_hint > 0.0 && std_hint.is_finite()) || !mean_hint.is_finite() {
        return Err(invalid("mean hint must be finite and std hint positive"));
    }
    if grid_size < MIN_GRID_SIZE {
        return Err(invalid(format!("grid size must be at least {MIN_GRID_SIZE}, got {grid_size}")));
    }
    let contour = nonneg_support && chf.laplace(Complex64::new(1.0, 0.0)).is_some();
    let point = |x: f64| -> Result<(f64, f64)> {
        if contour {
            bromwich_point(chf, x)
        } else {
            GilPelaez::new(chf, mean_hint, std_hint, (x - mean_hint).abs())?.point(x)
        }
    };

    let mut hi = mean_hint + SPAN_STDS * std_hint;
    for _ in 0..60 {
        if 1.0 - point(hi)?.0 <= TAIL_MASS {
            break;
        }
        hi = mean_hint + 1.5 * (hi - mean_hint);
    }

    let grid = if nonneg_support {
        let mut lo = if mean_hint > 0.0 { mean_hint.min(hi * 0.5) } else { hi * 1e-3 };
        while lo > 1e-250 && point(lo)?.0 > TAIL_MASS {
            lo *= 0.1;
        }
        let (l0, l1) = (lo.ln(), hi.ln());
        let m = grid_size - 1;
        std::iter::once(0.0)
            .chain((0..m).map(|j| (l0 + (l1 - l0) * j as f64 / (m - 1) as f64).exp()))
            .collect::<Vec<_>>()
    } else {
        let mut lo = mean_hint - SPAN_STDS * std_hint;
        for _ in 0..60 {
            if point(lo)?.0 <= TAIL_MASS {
                break;
            }
            lo = mean_hint - 1.5 * (mean_hint - lo);
        }
        stretched_grid(mean_hint, lo, hi, grid_size)
    };

    let (cdf, density) = if contour {
        let mut cdf = Vec::with_capacity(grid.len());
        let mut density = Vec::with_capacity(grid.len());
        for &x in &grid {
            let (f, d) = if x == 0.0 { (0.0, 0.0) } else { bromwich_point(chf, x)? };
            cdf.push(f);
            density.push(d);
        }
        (cdf, density)
    } else {
        let y_max = grid.iter().map(|x| (x - mean_hint).abs()).fold(0.0, f64::max);
        let rule = GilPelaez::new(chf, mean_hint, std_hint, y_max)?;
        rule.table(&grid)?
    };
    let mut table = TabulatedCdf::from_nodes(grid, cdf, density)?;
    if nonneg_support {
        table.cdf_values[0] = 0.0;
    }
    Ok(table)
}

/// Centre-crowded grid on `[lo, hi]`: uniform in `atanh(r * xi)` for `xi` in
/// `[-1, 1]`, each half scaled to its own side of `center`.
fn stretched_grid(center: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let norm = GRID_STRETCH.atanh();
    (0..n)
        .map(|j| {
            let xi = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
            let m = (GRID_STRETCH * xi).atanh() / norm;
            if m < 0.0 {
                center + (center - lo) * m
            } else {
                center + (hi - center) * m
            }
        })
        .collect()
}

/// Composite Gauss-Kronrod rule for the Gil-Pelaez integrals, shared by all
/// evaluation points.
struct GilPelaez {
    center: f64,
    nodes: Vec<Node>,
    /// `exp(-iu*center) * phi(u)` at each node.
    shifted: Vec<Complex64>,
}

impl GilPelaez {
    fn new(chf: &dyn CharacteristicFunction, center: f64, std_hint: f64, y_max: f64) -> Result<Self> {
        let upper = truncation_point(chf, std_hint)?;
        let width = (PI / y_max.max(1e-12)).min(1.0 / std_hint);
        let mut rule = Self::with_width(chf, center, upper, width)?;
        rule.center = center;
        Ok(rule)
    }

    fn with_width(chf: &dyn CharacteristicFunction, center: f64, upper: f64, width: f64) -> Result<Self> {
        let panels = (upper / width).ceil().max(1.0);
        if panels > 2.0e5 {
            return Err(Error::QuadratureFailure { x: center, error: f64::INFINITY });
        }
        let panels = panels as usize;
        let h = upper / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 15);
        for k in 0..panels {
            nodes.extend_from_slice(&panel_nodes(k as f64 * h, (k + 1) as f64 * h));
        }
        let shifted = nodes
            .iter()
            .map(|n| Complex64::from_polar(1.0, -n.x * center) * chf.chf(n.x))
            .collect();
        Ok(Self { center, nodes, shifted })
    }

    /// CDF, density and CDF error estimate at `x`.
    fn evaluate(&self, x: f64) -> (f64, f64, f64) {
        let y = x - self.center;
        let (mut cdf_int, mut dens_int, mut err) = (0.0, 0.0, 0.0);
        for (panel_nodes, panel_vals) in self.nodes.chunks(15).zip(self.shifted.chunks(15)) {
            let (mut k, mut g) = (0.0, 0.0);
            for (n, v) in panel_nodes.iter().zip(panel_vals) {
                let (s, c) = (n.x * y).sin_cos();
                // exp(-iuy) * v
                let re = c * v.re + s * v.im;
                let im = c * v.im - s * v.re;
                let q = im / n.x;
                k += n.wk * q;
                g += n.wg * q;
                dens_int += n.wk * re;
            }
            cdf_int += k;
            err += (k - g).abs();
        }
        (0.5 - cdf_int / PI, dens_int / PI, err / PI)
    }

    fn point(&self, x: f64) -> Result<(f64, f64)> {
        let (f, d, e) = self.evaluate(x);
        if e > MAX_CDF_ERROR {
            return Err(Error::QuadratureFailure { x, error: e });
        }
        Ok((f, d))
    }

    fn table(&self, grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut cdf = Vec::with_capacity(grid.len());
        let mut density = Vec::with_capacity(grid.len());
        for &x in grid {
            let (f, d) = self.point(x)?;
            cdf.push(f);
            density.push(d);
        }
        Ok((cdf, density))
    }
}

/// Smallest `U` on a geometric scan with `|phi(u)|/u < 1e-14` at `U` and `2U`.
fn truncation_point(chf: &dyn CharacteristicFunction, std_hint: f64) -> Result<f64> {
    let small = |u: f64| chf.chf(u).norm() / u < CHF_CUTOFF;
    let mut u = 1.0 / std_hint;
    while u < 1e7 / std_hint {
        if small(u) && small(2.0 * u) {
            return Ok(u);
        }
        u *= 1.25;
    }
    Err(Error::QuadratureFailure { x: f64::NAN, error: f64::INFINITY })
}

/// CDF and density of a non-negative law at `x > 0` by integrating its
/// Laplace transform along the hyperbola
/// `s(w) = mu (1 + sin(iw - delta))`, `mu = 6/x`.
///
/// The hyperbola passes to the right of the pole at `s = 0` and to the
/// left-bending branch cut of the transform; `delta` keeps the asymptotic
/// direction inside the sector where `|L(s)|` stays bounded.
fn bromwich_point(chf: &dyn CharacteristicFunction, x: f64) -> Result<(f64, f64)> {
    debug_assert!(x > 0.0);
    let rho = chf.laplace_growth().clamp(0.0, 0.999);
    let delta_max = if rho > 0.0 { 0.5 * PI * (1.0 / rho - 1.0) } else { f64::INFINITY };
    let delta = (0.8 * delta_max).min(1.17);
    let (sd, cd) = delta.sin_cos();
    let mu = CONTOUR_SCALE / x;

    let integrand = |w: f64| -> [f64; 2] {
        let (sh, ch) = (w.sinh(), w.cosh());
        let s = Complex64::new(mu * (1.0 - sd * ch), mu * cd * sh);
        let ds = Complex64::new(-mu * sd * sh, mu * cd * ch);
        let l = chf.laplace(s).unwrap_or(Complex64::new(f64::NAN, 0.0));
        let e = (s * x).exp() * l * ds;
        // the density is integrated as x f(x), on the same scale as F
        let (a, b) = ((e / s).im / PI, e.im * x / PI);
        if a.is_finite() && b.is_finite() {
            [a, b]
        } else {
            [0.0, 0.0]
        }
    };

    // e^{sx} decays like exp(-6 sin(delta) cosh w) along the contour
    let mut upper: f64 = 0.5;
    while upper < 60.0 {
        let tail = CONTOUR_SCALE * sd * upper.cosh() - CONTOUR_SCALE;
        if tail > 45.0 {
            break;
        }
        upper += 0.5;
    }
    let panels = (upper / 0.25).ceil() as usize;
    let ([cdf, density], err) = quad::integrate(integrand, 0.0, upper, panels, 1e-11, 20_000);
    if err > MAX_CDF_ERROR || !cdf.is_finite() {
        return Err(Error::QuadratureFailure { x, error: err });
    }
    Ok((cdf, (density / x).max(0.0)))
}

/// Point evaluation of the CDF of a real-line law by Gil-Pelaez inversion.
pub fn gil_pelaez_cdf(chf: &dyn CharacteristicFunction, x: f64, mean_hint: f64, std_hint: f64) -> Result<f64> {
    GilPelaez::new(chf, mean_hint, std_hint, (x - mean_hint).abs())?.point(x).map(|p| p.0)
}

/// Point evaluation of the CDF of a non-negative law by Bromwich contour
/// integration of its Laplace transform.
pub fn contour_cdf(chf: &dyn CharacteristicFunction, x: f64) -> Result<f64> {
    if chf.laplace(Complex64::new(1.0, 0.0)).is_none() {
        return Err(invalid("law has no Laplace transform"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    bromwich_point(chf, x).map(|p| p.0)
}

/// Table entry point: `cdf_at`.
pub fn cdf_at(t: &TabulatedCdf, x: f64) -> f64 {
    t.cdf_at(x)
}

/// Table entry point: `quantile`.
pub fn quantile(t: &TabulatedCdf, p: f64) -> Result<f64> {
    t.quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian() -> ChfFn<impl Fn(f64) -> Complex64 + Sync> {
        ChfFn(|u: f64| Complex64::new((-0.5 * u * u).exp(), 0.0))
    }

    #[test]
    fn gaussian_table() {
        let t = build_cdf(&gaussian(), 0.0, 1.0, false, 1024).unwrap();
        assert_abs_diff_eq!(t.cdf_at(0.0), 0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(t.cdf_at(1.959964), 0.975, epsilon = 1e-6);
        assert_abs_diff_eq!(t.quantile(0.5).unwrap(), 0.0, epsilon = 1e-7);
        assert!(t.cdf_values()[0] <= 1e-6);
        assert!(*t.cdf_values().last().unwrap() >= 1.0 - 1e-6);
        assert!(t.cdf_at(t.support_lo()) <= 1e-6);
        assert_eq!(t.cdf_at(t.support_lo() - 1.0), 0.0);
        assert_eq!(t.cdf_at(t.support_hi() + 1.0), 1.0);
    }

    #[test]
    fn interpolant_stays_within_cell_values() {
        let t = build_cdf(&gaussian(), 0.0, 1.0, false, 512).unwrap();
        let g = t.grid();
        for i in (0..g.len() - 1).step_by(7) {
            let mid = t.cdf_at(0.5 * (g[i] + g[i + 1]));
            assert!(mid >= t.cdf_values()[i] && mid <= t.cdf_values()[i + 1]);
        }
    }

    #[test]
    fn quantile_round_trip_and_errors() {
        let t = build_cdf(&gaussian(), 0.0, 1.0, false, 512).unwrap();
        for &x in &[-2.5, -0.3, 0.0, 0.7, 3.1] {
            assert_abs_diff_eq!(t.quantile(t.cdf_at(x)).unwrap(), x, epsilon = 1e-6);
        }
        assert!(matches!(t.quantile(0.0), Err(Error::ProbabilityOutOfRange(_))));
        assert!(matches!(t.quantile(1.0), Err(Error::ProbabilityOutOfRange(_))));
        assert!(t.quantile(f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_cdf(&gaussian(), 0.0, 1.0, false, 100).is_err());
        assert!(build_cdf(&gaussian(), 0.0, 0.0, false, 512).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let t = build_cdf(&gaussian(), 0.0, 1.0, false, 256).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 40 + 3 * 8 * 256);
        let back = TabulatedCdf::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        buf[0] = b'X';
        assert!(matches!(TabulatedCdf::read_from(buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn exponential_law_by_contour() {
        struct Exponential;
        impl CharacteristicFunction for Exponential {
            fn chf(&self, u: f64) -> Complex64 {
                1.0 / Complex64::new(1.0, -u)
            }
            fn laplace(&self, s: Complex64) -> Option<Complex64> {
                Some(1.0 / (1.0 + s))
            }
        }
        for &x in &[1e-3, 0.1, 1.0, 5.0, 20.0] {
            assert_abs_diff_eq!(contour_cdf(&Exponential, x).unwrap(), 1.0 - (-x).exp(), epsilon = 1e-10);
        }
        let t = build_cdf(&Exponential, 1.0, 1.0, true, 1024).unwrap();
        assert_eq!(t.cdf_values()[0], 0.0);
        let (m, v) = t.moments();
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-3);
    }
}

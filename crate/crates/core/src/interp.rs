//! Monotone cubic Hermite interpolation helpers.

/// Cubic Hermite interpolant on one cell `[x0, x1]` with end values and slopes.
#[inline]
pub fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
}

/// Derivative of [`hermite`] with respect to `x`.
#[inline]
pub fn hermite_slope(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * f0 + dh01 * f1) / h + dh10 * d0 + dh11 * d1
}

/// Pool-adjacent-violators: least-squares non-decreasing fit, in place.
pub fn isotonize(values: &mut [f64]) {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            let (s1, c1) = blocks[n - 2];
            let (s2, c2) = blocks[n - 1];
            if s1 / c1 as f64 <= s2 / c2 as f64 {
                break;
            }
            blocks.truncate(n - 2);
            blocks.push((s1 + s2, c1 + c2));
        }
    }
    let mut i = 0;
    for (s, c) in blocks {
        let mean = s / c as f64;
        for v in &mut values[i..i + c] {
            *v = mean;
        }
        i += c;
    }
}

/// Fritsch-Carlson limiter: adjusts node slopes so that the Hermite
/// interpolant of non-decreasing data is non-decreasing.
pub fn limit_monotone_slopes(x: &[f64], f: &[f64], d: &mut [f64]) {
    let n = x.len();
    for s in d.iter_mut() {
        if !(*s >= 0.0) {
            *s = 0.0;
        }
    }
    for i in 0..n.saturating_sub(1) {
        let delta = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
        if delta <= 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        let a = d[i] / delta;
        let b = d[i + 1] / delta;
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            d[i] = tau * a * delta;
            d[i + 1] = tau * b * delta;
        }
    }
}

/// Three-point finite-difference slopes, used when no analytic derivative
/// is available.
pub fn finite_difference_slopes(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut d = vec![0.0; n];
    d[0] = (f[1] - f[0]) / (x[1] - x[0]);
    d[n - 1] = (f[n - 1] - f[n - 2]) / (x[n - 1] - x[n - 2]);
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let s0 = (f[i] - f[i - 1]) / h0;
        let s1 = (f[i + 1] - f[i]) / h1;
        d[i] = (h1 * s0 + h0 * s1) / (h0 + h1);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pava_pools_violators() {
        let mut v = vec![0.0, 0.3, 0.2, 0.2, 0.9, 0.8];
        isotonize(&mut v);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert!((v[1] - 0.7 / 3.0).abs() < 1e-15);
        assert!((v[4] - 0.85).abs() < 1e-15);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let (a, b) = (0.5, 1.7);
        for k in 0..=10 {
            let x = a + (b - a) * k as f64 / 10.0;
            let v = hermite(a, b, f(a), f(b), df(a), df(b), x);
            assert!((v - f(x)).abs() < 1e-13);
            let s = hermite_slope(a, b, f(a), f(b), df(a), df(b), x);
            assert!((s - df(x)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn limited_interpolant_is_monotone(
            steps in proptest::collection::vec(0.0f64..1.0, 3..20),
            slopes in proptest::collection::vec(-1.0f64..50.0, 20),
        ) {
            let n = steps.len();
            let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
            let mut f = Vec::with_capacity(n);
            let mut acc = 0.0;
            for s in &steps { acc += s * s; f.push(acc); }
            let mut d: Vec<f64> = slopes[..n].to_vec();
            limit_monotone_slopes(&x, &f, &mut d);
            for i in 0..n - 1 {
                let mut prev = f[i];
                for k in 1..=20 {
                    let t = x[i] + (x[i + 1] - x[i]) * k as f64 / 20.0;
                    let v = hermite(x[i], x[i + 1], f[i], f[i + 1], d[i], d[i + 1], t);
                    prop_assert!(v >= prev - 1e-12);
                    prev = v;
                }
            }
        }
    }
}

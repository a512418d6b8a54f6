//! Gauss-Kronrod (7, 15) quadrature.

/// Kronrod abscissae on `[0, 1]`, descending; odd indices are the Gauss nodes.
pub const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

pub const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for `XGK[1], XGK[3], XGK[5], XGK[7]`.
pub const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One node of a composite rule: position and its Kronrod and Gauss weights
/// (the Gauss weight is zero at Kronrod-only nodes).
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub x: f64,
    pub wk: f64,
    pub wg: f64,
}

/// The 15 nodes of the rule mapped onto `[a, b]`.
pub fn panel_nodes(a: f64, b: f64) -> [Node; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [Node { x: c, wk: WGK[7] * h, wg: WG[3] * h }; 15];
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] * h } else { 0.0 };
        out[2 * j] = Node { x: c - h * XGK[j], wk: WGK[j] * h, wg };
        out[2 * j + 1] = Node { x: c + h * XGK[j], wk: WGK[j] * h, wg };
    }
    out
}

/// Kronrod estimate and `|K - G|` for an `N`-vector integrand on `[a, b]`.
pub fn gk15<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], f64) {
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for node in panel_nodes(a, b) {
        let v = f(node.x);
        for i in 0..N {
            k[i] += node.wk * v[i];
            g[i] += node.wg * v[i];
        }
    }
    let err = k.iter().zip(&g).map(|(k, g)| (k - g).abs()).fold(0.0, f64::max);
    (k, err)
}

/// Globally adaptive Gauss-Kronrod integration of a vector integrand.
///
/// `[a, b]` is first split into `initial_panels` equal pieces; the panel
/// with the largest error is bisected until the summed error estimate falls
/// below `abs_tol` or `max_panels` is reached. Returns the integral and the
/// final error estimate.
pub fn integrate<const N: usize>(
    f: impl Fn(f64) -> [f64; N],
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    max_panels: usize,
) -> ([f64; N], f64) {
    let n0 = initial_panels.max(1);
    let width = (b - a) / n0 as f64;
    let mut panels: Vec<(f64, f64, [f64; N], f64)> = (0..n0)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == n0 { b } else { lo + width };
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();

    loop {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= abs_tol || panels.len() >= max_panels {
            let mut sum = [0.0; N];
            for p in &panels {
                for (s, v) in sum.iter_mut().zip(&p.2) {
                    *s += v;
                }
            }
            return (sum, total_err);
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine precision
            let (v, _) = gk15(&f, lo, hi);
            panels.push((lo, hi, v, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

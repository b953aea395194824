//! Adaptive Gauss–Kronrod (7, 15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

/// One G7K15 panel: Kronrod value and `|K - G|` error estimate.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * hw, ((k - g) * hw).abs())
}

/// `int_a^b f` to absolute tolerance `tol` by recursive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (v, err) = whole;
        if err <= tol || depth >= MAX_DEPTH || (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            return v;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, left, depth + 1) + rec(f, m, b, 0.5 * tol, right, depth + 1)
    }
    rec(f, a, b, tol, gk15(f, a, b), 0)
}

/// Sum of [`integrate`] over consecutive panels `nodes[k]..nodes[k + 1]`,
/// the tolerance split in proportion to panel length.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, nodes: &[f64], tol: f64) -> f64 {
    let (Some(&first), Some(&last)) = (nodes.first(), nodes.last()) else {
        return 0.0;
    };
    let span = (last - first).abs();
    if span == 0.0 {
        return 0.0;
    }
    nodes
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], tol * (w[1] - w[0]).abs() / span))
        .sum()
}

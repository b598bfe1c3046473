// SPDX-License-Identifier: Apache-2.0

//! Small numerical kernels shared by the modules: golden-section search,
//! finite-difference stencils on uniform grids, local interpolation,
//! adaptive Gauss–Kronrod quadrature and least-squares slopes.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimises `f` on `[a, b]` by golden-section search. Returns `(x, f(x))`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= xtol * (1.0 + c.abs().max(d.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximises `f` on `[a, b]` by golden-section search.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (x, v) = golden_min(|x| -f(x), a, b, xtol);
    (x, -v)
}

/// First derivative of uniformly sampled data, fourth order everywhere
/// (central in the interior, one-sided five-point at the two edges).
pub fn diff1(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "need at least five samples");
    let v = values;
    let mut out = vec![0.0; n];
    for i in 2..n - 2 {
        out[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    }
    let fwd = |j: usize| (-25.0 * v[j] + 48.0 * v[j + 1] - 36.0 * v[j + 2] + 16.0 * v[j + 3] - 3.0 * v[j + 4]) / (12.0 * h);
    let skew = |j: usize| (-3.0 * v[j - 1] - 10.0 * v[j] + 18.0 * v[j + 1] - 6.0 * v[j + 2] + v[j + 3]) / (12.0 * h);
    out[0] = fwd(0);
    out[1] = skew(1);
    let bwd = |j: usize| (25.0 * v[j] - 48.0 * v[j - 1] + 36.0 * v[j - 2] - 16.0 * v[j - 3] + 3.0 * v[j - 4]) / (12.0 * h);
    let bskew = |j: usize| (3.0 * v[j + 1] + 10.0 * v[j] - 18.0 * v[j - 1] + 6.0 * v[j - 2] - v[j - 3]) / (12.0 * h);
    out[n - 1] = bwd(n - 1);
    out[n - 2] = bskew(n - 2);
    out
}

/// Second derivative of uniformly sampled data. Fourth-order central
/// stencil in the interior, third-order one-sided stencils at the edges.
pub fn diff2(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 6, "need at least six samples");
    let v = values;
    let h2 = h * h;
    let mut out = vec![0.0; n];
    for i in 2..n - 2 {
        out[i] = (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h2);
    }
    let fwd = |j: usize| {
        (45.0 * v[j] - 154.0 * v[j + 1] + 214.0 * v[j + 2] - 156.0 * v[j + 3] + 61.0 * v[j + 4] - 10.0 * v[j + 5])
            / (12.0 * h2)
    };
    let bwd = |j: usize| {
        (45.0 * v[j] - 154.0 * v[j - 1] + 214.0 * v[j - 2] - 156.0 * v[j - 3] + 61.0 * v[j - 4] - 10.0 * v[j - 5])
            / (12.0 * h2)
    };
    out[0] = fwd(0);
    out[1] = (10.0 * v[0] - 15.0 * v[1] - 4.0 * v[2] + 14.0 * v[3] - 6.0 * v[4] + v[5]) / (12.0 * h2);
    out[n - 1] = bwd(n - 1);
    out[n - 2] =
        (10.0 * v[n - 1] - 15.0 * v[n - 2] - 4.0 * v[n - 3] + 14.0 * v[n - 4] - 6.0 * v[n - 5] + v[n - 6]) / (12.0 * h2);
    out
}

/// Cubic Lagrange interpolation of uniformly sampled data starting at
/// `x0` with spacing `h`. Exact at the nodes.
pub fn interp_cubic(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let t = (x - x0) / h;
    let nearest = t.round();
    if (t - nearest).abs() < 1e-12 && nearest >= 0.0 && (nearest as usize) < n {
        return values[nearest as usize];
    }
    let i = (t.floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = t - i as f64;
    let (p0, p1, p2, p3) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for j in 0..7 {
        let dx = r * GK_NODES[j];
        let s = f(c - dx) + f(c + dx);
        kron += GK_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += G_WEIGHTS[j / 2] * s;
        }
    }
    (kron * r, ((kron - gauss) * r).abs())
}

/// Adaptive 15-point Gauss–Kronrod integration of `f` over `[a, b]`
/// to absolute tolerance `tol`, or relative `1e-13` when that is looser.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (val, err) = whole;
        if err <= tol.max(1e-13 * val.abs()) || depth >= 40 || !err.is_finite() {
            return val;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        recurse(f, a, m, 0.5 * tol, left, depth + 1) + recurse(f, m, b, 0.5 * tol, right, depth + 1)
    }
    recurse(f, a, b, tol, gk15(f, a, b), 0)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

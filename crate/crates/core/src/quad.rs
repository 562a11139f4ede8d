//! Adaptive Gauss–Kronrod (7/15) quadrature over vector-valued integrands.

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
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let fc = f(c);
    for k in 0..N {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for k in 0..N {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0_f64;
    for k in 0..N {
        kron[k] *= h;
        gauss[k] *= h;
        err = err.max((kron[k] - gauss[k]).abs());
    }
    (kron, err)
}

/// Integrates `f` over `[a, b]`, pre-splitting at `breaks` that fall inside
/// the interval. The error estimate is the max over components.
pub(crate) fn integrate<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> [f64; N] {
    let mut edges: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    edges.extend(inner);
    edges.push(b);

    let mut pending: Vec<(f64, f64, [f64; N], f64, u32)> = edges
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e, 0)
        })
        .collect();

    let mut total = [0.0; N];
    let mut iterations = 0usize;
    while let Some((lo, hi, value, err, depth)) = pending.pop() {
        iterations += 1;
        let scale = value.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let local_tol = abs_tol.max(rel_tol * scale) * ((hi - lo) / (b - a)).sqrt().max(1e-3);
        if err <= local_tol || depth >= 48 || iterations > 200_000 {
            for k in 0..N {
                total[k] += value[k];
            }
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pending.push((lo, mid, v1, e1, depth + 1));
        pending.push((mid, hi, v2, e2, depth + 1));
    }
    total
}

pub(crate) fn integrate_scalar<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    integrate(|x| [f(x)], a, b, breaks, abs_tol, rel_tol)[0]
}

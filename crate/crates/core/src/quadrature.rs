//! One-dimensional quadrature: adaptive Gauss–Kronrod and fixed composite rules.

use crate::{Error, Result};

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate, its difference to the embedded 7-point Gauss
/// rule, and the Kronrod integral of `|f|` (the roundoff scale).
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut absolute = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        kronrod += WGK[j] * (f1 + f2);
        absolute += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), absolute * h.abs())
}

/// Error estimates below this multiple of `ε ∫|f|` are roundoff-dominated.
const ROUNDOFF_FACTOR: f64 = 50.0;

/// Adaptive Gauss–Kronrod (7–15) integration with global error control.
///
/// Subdivides the interval with the largest error estimate until the total
/// estimate drops below `max(abs_tol, rel_tol·|I|)`, or below the roundoff
/// level of the integrand when cancellation makes the tolerance unreachable.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    if a == b {
        return Ok(0.0);
    }
    let (v, e, m) = gauss_kronrod(&f, a, b);
    let mut intervals = vec![(a, b, v, e, m)];
    let mut total = v;
    let mut error = e;
    let mut magnitude = m;
    let fail = |error: f64, n: usize| Error::QuadratureNonConvergent {
        lower: a,
        upper: b,
        estimate: error,
        intervals: n,
    };
    while error > abs_tol.max(rel_tol * total.abs()).max(ROUNDOFF_FACTOR * f64::EPSILON * magnitude) {
        if !total.is_finite() || !error.is_finite() {
            return Err(fail(error, intervals.len()));
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(fail(error, intervals.len()));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty interval list");
        let (lo, hi, v, e, m) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1, m1) = gauss_kronrod(&f, lo, mid);
        let (v2, e2, m2) = gauss_kronrod(&f, mid, hi);
        total += v1 + v2 - v;
        error += e1 + e2 - e;
        magnitude += m1 + m2 - m;
        intervals.push((lo, mid, v1, e1, m1));
        intervals.push((mid, hi, v2, e2, m2));
    }
    if !total.is_finite() {
        return Err(fail(error, intervals.len()));
    }
    // Re-sum to avoid drift from the incremental updates.
    Ok(intervals.iter().map(|i| i.2).sum())
}

/// Composite Simpson rule on `n` (rounded up to even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Trapezoidal rule on tabulated, uniformly spaced samples.
pub fn trapezoid_uniform(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Trapezoidal rule on tabulated samples at arbitrary abscissae.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

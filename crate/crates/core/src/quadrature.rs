//! Adaptive 7/15-point Gauss-Kronrod quadrature for complex integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::ComplexSum;

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for (i, &x) in XGK[..7].iter().enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Integral of f over [a, b] to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    const MAX_INTERVALS: usize = 200_000;
    const INITIAL_PIECES: usize = 32;
    let width = (b - a) / INITIAL_PIECES as f64;
    let mut stack: Vec<(f64, f64)> = (0..INITIAL_PIECES)
        .map(|i| (a + i as f64 * width, a + (i + 1) as f64 * width))
        .collect();
    let mut total = ComplexSum::new();
    let mut processed = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        processed += 1;
        if processed > MAX_INTERVALS {
            return Err(Error::InternalConsistency(format!(
                "quadrature on [{a}, {b}] did not reach tolerance {tol:e}"
            )));
        }
        let (est, err) = kronrod_15(&f, lo, hi);
        let share = tol * (hi - lo) / (b - a);
        if err <= share || (hi - lo) < 1e-12 * (b - a) {
            total.add(est);
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Ok(total.value())
}

//! Distance between level-set frequencies and a normal density, and the
//! binomial-versus-Gaussian comparison.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{gaussian_pdf, gaussian_two_sided_tail, BinomialWindow, ComplexSum, NeumaierSum};
use crate::sieve::{level_set_counts, ThetaTable};
use crate::weights::WeightExpr;

/// Gaussian terms further than this many standard deviations out are dropped.
pub const SIGMA_CUTOFF: f64 = 12.0;

#[derive(Clone, Debug, Serialize)]
pub struct GaussianDiagnostics {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L")]
    pub l_of_n: f64,
    pub variation_distance: f64,
    pub window_mass: f64,
    pub window: (f64, f64),
    /// Normal mass beyond the cutoff, which the distance does not include.
    pub gaussian_tail_bound: f64,
}

pub fn variation_distance(theta: &ThetaTable, l: &WeightExpr, n: u64) -> Result<GaussianDiagnostics> {
    variation_distance_with(theta, l, n, 0.6)
}

/// sum_k |#{n <= N : theta(n) = k}/N - g(k, L(N), sqrt(L(N)))| over every
/// attained k and every integer k within the cutoff, plus the mass of theta
/// inside [L - L^e, L + L^e].
pub fn variation_distance_with(theta: &ThetaTable, l: &WeightExpr, n: u64, window_exponent: f64) -> Result<GaussianDiagnostics> {
    let l_of_n = l.eval(n as f64);
    if !(l_of_n >= 1.0) {
        return Err(Error::arg(format!("L(N) = {l_of_n} < 1 at N = {n}")));
    }
    let counts = level_set_counts(theta, n)?;
    let sigma = l_of_n.sqrt();
    let lo = (l_of_n - SIGMA_CUTOFF * sigma).ceil() as i64;
    let hi = (l_of_n + SIGMA_CUTOFF * sigma).floor() as i64;
    let nf = n as f64;

    let mut dist = NeumaierSum::new();
    for k in lo..=hi {
        let freq = if k >= 0 {
            counts.get(&(k as u32)).copied().unwrap_or(0) as f64 / nf
        } else {
            0.0
        };
        dist.add((freq - gaussian_pdf(k as f64, l_of_n, sigma)).abs());
    }
    for (&k, &c) in &counts {
        let k = k as i64;
        if k < lo || k > hi {
            dist.add((c as f64 / nf - gaussian_pdf(k as f64, l_of_n, sigma)).abs());
        }
    }

    let half = l_of_n.powf(window_exponent);
    let window = (l_of_n - half, l_of_n + half);
    let inside: u64 = counts
        .iter()
        .filter(|(&k, _)| (k as f64) >= window.0 && (k as f64) <= window.1)
        .map(|(_, &c)| c)
        .sum();
    Ok(GaussianDiagnostics {
        n,
        l_of_n,
        variation_distance: dist.value(),
        window_mass: inside as f64 / nf,
        window,
        gaussian_tail_bound: gaussian_two_sided_tail(SIGMA_CUTOFF),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BinomialGaussianReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub window_exponent: f64,
    /// max |1 - g(2m, N, sqrt N) / (C(N, m) 2^-(N+1))| over the window.
    pub sup_ratio_dev: f64,
    /// L1 distance between the two weight systems over n = 2m, 2m + 1 in the window.
    pub l1_window: f64,
}

pub fn binomial_vs_gaussian(n: u64) -> Result<BinomialGaussianReport> {
    binomial_vs_gaussian_with(n, 2.0 / 3.0)
}

/// Compares C(N, floor(n/2)) / 2^(N+1) with g(2 floor(n/2), N, sqrt N) on
/// the indices with |N - 2m| <= N^e, m = floor(n/2).
pub fn binomial_vs_gaussian_with(n: u64, window_exponent: f64) -> Result<BinomialGaussianReport> {
    if n < 16 {
        return Err(Error::arg(format!("binomial comparison needs N >= 16, got {n}")));
    }
    let window = BinomialWindow::new(n)?;
    let nf = n as f64;
    let radius = nf.powf(window_exponent);
    let sigma = nf.sqrt();
    let mut sup = 0.0f64;
    let mut l1 = NeumaierSum::new();
    for (m, p) in window.iter() {
        if (nf - 2.0 * m as f64).abs() > radius {
            continue;
        }
        let delta = 0.5 * p;
        let gamma = gaussian_pdf(2.0 * m as f64, nf, sigma);
        sup = sup.max((1.0 - gamma / delta).abs());
        l1.add(2.0 * (gamma - delta).abs());
    }
    Ok(BinomialGaussianReport {
        n,
        window_exponent,
        sup_ratio_dev: sup,
        l1_window: l1.value(),
    })
}

/// sum_n |a(n) - b(n)|, treating missing entries as 0.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    (0..len).map(|i| (get(a, i) - get(b, i)).abs()).collect::<NeumaierSum>().value()
}

/// |sum a(n) f(n) - sum b(n) f(n)|; bounded by l1_distance(a, b) when |f| <= 1.
pub fn weighted_sum_gap(a: &[f64], b: &[f64], f: &[Complex64]) -> f64 {
    let mut acc = ComplexSum::new();
    for (i, v) in f.iter().enumerate() {
        let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
        acc.add(v * d);
    }
    acc.value().norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::{synthetic_theta, SyntheticScale, ThetaKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_table_distance() {
        let t = ThetaTable::from_u8(ThetaKind::BigOmega, vec![1; 50]).unwrap();
        let d = variation_distance(&t, &WeightExpr::LogLog { floor: true }, 10).unwrap();
        assert_eq!(d.l_of_n, 1.0);
        let expect = 2.0 - 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((d.variation_distance - expect).abs() < 1e-6, "{}", d.variation_distance);
        assert_eq!(d.window_mass, 1.0);
    }

    #[test]
    fn frozen_synthetic_table_is_close_to_gaussian() {
        let l: WeightExpr = "floor(sqrt(x))".parse().unwrap();
        let mut prev = f64::INFINITY;
        for n in [10_000u64, 100_000, 1_000_000] {
            let t = synthetic_theta(&l, n, SyntheticScale::Frozen).unwrap();
            let d = variation_distance(&t, &l, n).unwrap();
            assert!(d.variation_distance < prev, "N={n}");
            prev = d.variation_distance;
            assert!(d.window_mass <= 1.0 + 1e-12);
            if n == 1_000_000 {
                assert!(d.variation_distance <= 0.02);
                assert!(d.window_mass >= 0.95);
            }
        }
    }

    #[test]
    fn binomial_window_comparison() {
        let r = binomial_vs_gaussian(1 << 10).unwrap();
        assert!(r.sup_ratio_dev <= 0.05);
        let devs: Vec<f64> = [10, 12, 14]
            .iter()
            .map(|&e| binomial_vs_gaussian(1 << e).unwrap().sup_ratio_dev)
            .collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
        assert!(binomial_vs_gaussian(1 << 14).unwrap().l1_window <= 0.02);
        assert!(binomial_vs_gaussian(8).is_err());
    }

    #[test]
    fn binomial_symmetry_in_integers() {
        for n in 0..=64u64 {
            let mut row = vec![1u128];
            for k in 0..n {
                let next = row[k as usize] * (n - k) as u128 / (k + 1) as u128;
                row.push(next);
            }
            for k in 0..=n {
                assert_eq!(row[k as usize], row[(n - k) as usize]);
            }
        }
    }

    #[test]
    fn changing_weights_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..300).map(|_| rng.gen::<f64>() / 150.0).collect();
        let b: Vec<f64> = (0..300).map(|_| rng.gen::<f64>() / 150.0).collect();
        let d = l1_distance(&a, &b);
        for _ in 0..20 {
            let f: Vec<Complex64> = (0..300)
                .map(|_| Complex64::from_polar(rng.gen::<f64>(), rng.gen::<f64>() * 6.3))
                .collect();
            assert!(weighted_sum_gap(&a, &b, &f) <= d + 1e-12);
        }
    }
}

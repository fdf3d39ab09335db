//! Compensated summation, Gaussian helpers and central binomial weights.

use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated_sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value()
}

/// Density of N(mu, sigma^2) at x.
pub fn gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Two-sided standard normal tail mass beyond `z` standard deviations.
pub fn gaussian_two_sided_tail(z: f64) -> f64 {
    erfc(z / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    // mean 0 / sd 1 is always a valid parameterisation
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Base-2 van der Corput value of n, in [0, 1).
pub fn radical_inverse_base2(n: u64) -> f64 {
    n.reverse_bits() as f64 / 18_446_744_073_709_551_616.0
}

/// Distance from x to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// e^{2 pi i t}, reducing t mod 1 first to keep the argument small.
#[inline]
pub fn unit_phase(t: f64) -> Complex64 {
    let frac = t - t.floor();
    // rotate by a whole quarter turn exactly, then evaluate |angle| <= pi/4
    let quarter = (4.0 * frac).round();
    let (s, c) = (std::f64::consts::TAU * (frac - 0.25 * quarter)).sin_cos();
    match quarter as i64 & 3 {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

/// The probabilities C(M, j) / 2^M over a window of j around M/2.
///
/// Orders up to [`BinomialWindow::EXACT_LIMIT`] keep every j. Larger orders
/// keep |j - M/2| <= 3 sqrt(M ln M); the dropped mass is at most 2 M^-18 by
/// Hoeffding's inequality and the kept weights are renormalised to sum to 1.
/// Weights are built by the ratio recurrence (from the edge while 2^-M is a
/// normal float, from the centre otherwise) and mirrored, so w(j) == w(M - j)
/// bit for bit.
#[derive(Clone, Debug)]
pub struct BinomialWindow {
    order: u64,
    lo: u64,
    weights: Vec<f64>,
    truncation_bound: f64,
}

const EDGE_START_LIMIT: u64 = 1000;

impl BinomialWindow {
    pub const EXACT_LIMIT: u64 = 2048;

    pub fn new(order: u64) -> Result<Self> {
        let m = order;
        let (lo, truncation_bound) = if m <= Self::EXACT_LIMIT {
            (0, 0.0)
        } else {
            let mf = m as f64;
            let half_width = 3.0 * (mf * mf.ln()).sqrt();
            let lo = (mf / 2.0 - half_width).ceil().max(0.0) as u64;
            (lo, 2.0 * mf.powf(-18.0))
        };
        let hi = m - lo;
        let len = usize::try_from(hi - lo + 1)
            .map_err(|_| Error::Resource(format!("binomial window of order {m} too large")))?;
        let mut weights = Vec::new();
        weights
            .try_reserve_exact(len)
            .map_err(|e| Error::Resource(format!("binomial window of order {m}: {e}")))?;
        weights.resize(len, 0.0);

        let centre = m / 2;
        if m <= EDGE_START_LIMIT {
            // start from the exactly representable edge weight 2^-M
            let mut w = 0.5f64.powi(m as i32);
            for j in 0..=centre {
                weights[j as usize] = w;
                weights[(m - j) as usize] = w;
                w *= (m - j) as f64 / (j + 1) as f64;
            }
        } else {
            let mut w = 1.0f64;
            let mut j = centre;
            loop {
                weights[(j - lo) as usize] = w;
                weights[(m - j - lo) as usize] = w;
                if j == lo {
                    break;
                }
                w *= j as f64 / (m - j + 1) as f64;
                j -= 1;
            }
            let total = compensated_sum(&weights);
            for w in weights.iter_mut() {
                *w /= total;
            }
        }
        Ok(Self {
            order,
            lo,
            weights,
            truncation_bound,
        })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.order - self.lo
    }

    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    pub fn is_exact(&self) -> bool {
        self.truncation_bound == 0.0
    }

    pub fn weight(&self, j: u64) -> f64 {
        if j < self.lo || j > self.hi() {
            0.0
        } else {
            self.weights[(j - self.lo) as usize]
        }
    }

    /// (j, C(M, j) / 2^M) for every kept j.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.lo + i as u64, w))
    }
}

//! Uniform distribution mod 1: Weyl sums under each averaging scheme, star
//! discrepancy, short-interval scans with van der Corput envelopes, and the
//! probes for the growth cases where averages do not vanish.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::Serialize;

use crate::averages::{binomial_mean_on, interval_mean_with, weighted_mean_with, BinomialMode};
use crate::error::{Error, Result};
use crate::hardy::{classify_hardy, fresnel_constant, HardyExpr};
use crate::numeric::{dist_to_int, BinomialWindow, NeumaierSum};
use crate::sieve::ThetaTable;
use crate::weights::{WeightExpr, WeightTable};

/// Slack on the van der Corput envelopes, whose constants are unknown.
pub const ENVELOPE_SLACK: f64 = 5.0;

/// Points in [0, 1) with nonnegative weights of total mass at most 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::arg(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::arg(format!("point {p} outside [0, 1)")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::arg(format!("weight {w} is not a nonnegative number")));
        }
        let mass: f64 = weights.iter().copied().collect::<NeumaierSum>().value();
        if mass > 1.0 + 1e-9 {
            return Err(Error::arg(format!("weights sum to {mass} > 1")));
        }
        Ok(WeightedSample { points, weights })
    }

    /// Reduces each value mod 1.
    pub fn from_values(values: &[f64], weights: Vec<f64>) -> Result<Self> {
        let points = values
            .iter()
            .map(|v| {
                let r = v - v.floor();
                // v slightly below an integer can round to exactly 1
                if r >= 1.0 {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        Self::new(points, weights)
    }

    pub fn uniform(values: &[f64]) -> Result<Self> {
        let w = 1.0 / values.len().max(1) as f64;
        Self::from_values(values, vec![w; values.len()])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// sum_j w_j e^{2 pi i k p_j}.
    pub fn weyl(&self, k: i64) -> Complex64 {
        let mut acc = crate::numeric::ComplexSum::new();
        for (&p, &w) in self.points.iter().zip(&self.weights) {
            acc.add(crate::numeric::unit_phase(k as f64 * p) * w);
        }
        acc.value()
    }
}

/// sup over x in [0, 1] of |sum_{p_j < x} w_j - x|.
pub fn star_discrepancy(sample: &WeightedSample) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::arg("star discrepancy of an empty sample"));
    }
    let mut order: Vec<(f64, f64)> = sample.points.iter().copied().zip(sample.weights.iter().copied()).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut sup = 0.0f64;
    let mut cum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let p = order[i].0;
        // mass strictly below p, evaluated at x = p
        sup = sup.max((cum - p).abs());
        while i < order.len() && order[i].0 == p {
            cum += order[i].1;
            i += 1;
        }
        // just to the right of p
        sup = sup.max((cum - p).abs());
    }
    sup = sup.max((cum - 1.0).abs());
    Ok(sup.min(1.0))
}

#[derive(Clone, Copy, Debug)]
pub enum WeylScheme<'a> {
    Cesaro,
    Weighted(&'a WeightTable),
    Bin,
    Bin2,
}

/// What h is applied to: n itself, or theta(n).
#[derive(Clone, Copy, Debug)]
pub enum ValueSource<'a> {
    Raw,
    Theta(&'a ThetaTable),
}

/// The scheme average of e^{2 pi i k h(v(n))} over n <= N.
pub fn weyl_sum(scheme: WeylScheme<'_>, source: ValueSource<'_>, h: &HardyExpr, k: i64, n: u64) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::arg("frequency k must be nonzero"));
    }
    let reach = match scheme {
        WeylScheme::Bin2 => 2 * n,
        _ => n,
    };
    match source {
        ValueSource::Raw => run_scheme(scheme, n, |i| h.phase(k, i as f64)),
        ValueSource::Theta(t) => {
            if reach > t.limit() {
                return Err(Error::arg(format!("N = {n} needs theta up to {reach}, table stops at {}", t.limit())));
            }
            let phases: Vec<Complex64> = (0..=t.max_value()).map(|v| h.phase(k, v as f64)).collect();
            run_scheme(scheme, n, |i| phases[t.get(i) as usize])
        }
    }
}

fn run_scheme<F: Fn(u64) -> Complex64>(scheme: WeylScheme<'_>, n: u64, f: F) -> Result<Complex64> {
    match scheme {
        WeylScheme::Cesaro => {
            let table = WeightTable::build(&WeightExpr::Cesaro, n)?;
            weighted_mean_with(&table, n, f)
        }
        WeylScheme::Weighted(w) => weighted_mean_with(w, n, f),
        WeylScheme::Bin | WeylScheme::Bin2 => {
            if n == 0 {
                return Err(Error::arg("binomial mean needs N >= 1"));
            }
            let mode = if matches!(scheme, WeylScheme::Bin) {
                BinomialMode::Bin
            } else {
                BinomialMode::Bin2
            };
            let window = BinomialWindow::new(n)?;
            Ok(binomial_mean_on(&window, mode, f).0)
        }
    }
}

/// The points h(v(n)) mod 1 carrying the scheme's weights at N, for
/// measuring discrepancy under that scheme. Zero-weight indices are omitted.
pub fn scheme_sample(scheme: WeylScheme<'_>, source: ValueSource<'_>, h: &HardyExpr, n: u64) -> Result<WeightedSample> {
    if n == 0 {
        return Err(Error::arg("sample needs N >= 1"));
    }
    let mut weighted: Vec<(u64, f64)> = Vec::new();
    match scheme {
        WeylScheme::Cesaro => weighted.extend((1..=n).map(|i| (i, 1.0 / n as f64))),
        WeylScheme::Weighted(w) => {
            if n > w.limit() {
                return Err(Error::arg(format!("N = {n} outside weight table range 1..={}", w.limit())));
            }
            let top = w.w(n);
            if !(top > 0.0 && top.is_finite()) {
                return Err(Error::DegenerateWeight { n, value: top });
            }
            weighted.extend((1..=n).map(|i| (i, w.dw(i) / top)).filter(|&(_, d)| d != 0.0));
        }
        WeylScheme::Bin | WeylScheme::Bin2 => {
            let window = BinomialWindow::new(n)?;
            for (j, p) in window.iter() {
                if matches!(scheme, WeylScheme::Bin) {
                    if j >= 1 {
                        weighted.push((j, p));
                    }
                } else {
                    if j >= 1 {
                        weighted.push((2 * j, 0.5 * p));
                    }
                    if j < n {
                        weighted.push((2 * j + 1, 0.5 * p));
                    }
                }
            }
        }
    }
    let value = |i: u64| -> Result<f64> {
        match source {
            ValueSource::Raw => Ok(h.eval(i as f64)),
            ValueSource::Theta(t) => t
                .checked_get(i)
                .map(|v| h.eval(v as f64))
                .ok_or_else(|| Error::arg(format!("theta table stops at {}, sample needs {i}", t.limit()))),
        }
    };
    let values = weighted.iter().map(|&(i, _)| value(i)).collect::<Result<Vec<f64>>>()?;
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::arg(format!("h produced the non-finite value {v}")));
    }
    // clamp tiny negative mass drift from renormalised windows
    let weights = weighted.into_iter().map(|(_, w)| w.max(0.0)).collect();
    WeightedSample::from_values(&values, weights)
}

#[derive(Clone, Debug, Serialize)]
pub struct IntervalScanRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub s_of_n: u64,
    pub modulus: f64,
    /// alpha lambda^(1/2) + |I|^-1 lambda^(-1/2) from h''.
    pub envelope_1: f64,
    /// alpha^(1/3) lambda^(1/6) + alpha^(1/4) |I|^(-1/4) + lambda^(-1/4) |I|^(-3/4) from h'''.
    pub envelope_2: f64,
    pub within_envelope: bool,
}

/// |E_{n in [N - s(N), N]} e^{2 pi i k h(n)}| with both envelopes at C = 1.
///
/// lambda = |k h^(j)(N)| and alpha = |h^(j)(N - s(N))| / |h^(j)(N)|, so that
/// lambda <= |k h^(j)| <= alpha lambda on the interval once h^(j) is monotone.
pub fn interval_weyl_point(h: &HardyExpr, h2: &HardyExpr, h3: &HardyExpr, k: i64, s: &WeightExpr, n: u64) -> Result<IntervalScanRow> {
    let s_of_n = s.eval(n as f64);
    if !(s_of_n >= 0.0 && s_of_n <= (n as f64) - 1.0) {
        return Err(Error::arg(format!("s(N) = {s_of_n} outside [0, N - 1] at N = {n}")));
    }
    let s_of_n = s_of_n.floor() as u64;
    let a = n - s_of_n;
    let modulus = interval_mean_with(a, n, |i| h.phase(k, i as f64))?.norm();
    let len = (s_of_n + 1) as f64;
    let kf = (k as f64).abs();
    let shape = |d: &HardyExpr| {
        let top = d.eval(n as f64).abs();
        (kf * top, d.eval(a as f64).abs() / top)
    };
    let (l2, a2) = shape(h2);
    let envelope_1 = a2 * l2.sqrt() + 1.0 / (len * l2.sqrt());
    let (l3, a3) = shape(h3);
    let envelope_2 = a3.cbrt() * l3.powf(1.0 / 6.0) + a3.powf(0.25) * len.powf(-0.25) + l3.powf(-0.25) * len.powf(-0.75);
    let bound = envelope_1.min(envelope_2);
    Ok(IntervalScanRow {
        n,
        s_of_n,
        modulus,
        envelope_1,
        envelope_2,
        within_envelope: !bound.is_finite() || modulus <= ENVELOPE_SLACK * bound,
    })
}

pub fn interval_weyl_scan(h: &HardyExpr, k: i64, s: &WeightExpr, grid: &[u64]) -> Result<Vec<IntervalScanRow>> {
    if k == 0 {
        return Err(Error::arg("frequency k must be nonzero"));
    }
    let h2 = h.differentiate(2)?;
    let h3 = h.differentiate(3)?;
    grid.iter().map(|&n| interval_weyl_point(h, &h2, &h3, k, s, n)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Case4Hit {
    #[serde(rename = "N")]
    pub n: u64,
    /// ||k h'(N)||, distance to the nearest integer.
    pub derivative_gap: f64,
    /// |k h''(N)|.
    pub curvature: f64,
    pub modulus: f64,
    pub predicted: f64,
}

/// Every N <= N_max with ||k h'(N)|| <= |k h''(N)|, paired with the bin2
/// Weyl modulus there and the Fresnel prediction (1 + 4 pi^2 (kA)^2)^(-1/4).
pub fn case4_probe(h: &HardyExpr, k: i64, n_max: u64) -> Result<Vec<Case4Hit>> {
    if k == 0 {
        return Err(Error::arg("frequency k must be nonzero"));
    }
    let class = classify_hardy(h)?;
    let a = match (class.case_id, class.case4_constant) {
        (4, Some(a)) => a,
        (c, _) => return Err(Error::arg(format!("{h} is in growth case {c}, not case 4"))),
    };
    let predicted = fresnel_constant((k as f64 * a).abs())?;
    let h1 = h.differentiate(1)?;
    let h2 = h.differentiate(2)?;
    let kf = k as f64;
    let mut hits = Vec::new();
    for n in 2..=n_max {
        let x = n as f64;
        let gap = dist_to_int(kf * h1.eval(x));
        let curvature = (kf * h2.eval(x)).abs();
        if gap <= curvature {
            let modulus = weyl_sum(WeylScheme::Bin2, ValueSource::Raw, h, k, n)?.norm();
            hits.push(Case4Hit {
                n,
                derivative_gap: gap,
                curvature,
                modulus,
                predicted,
            });
        }
    }
    Ok(hits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    Case1,
    Case3,
}

impl std::str::FromStr for ProbeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "case1" | "1" => Ok(ProbeMode::Case1),
            "case3" | "3" => Ok(ProbeMode::Case3),
            other => Err(Error::arg(format!("unknown probe mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbePoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub modulus: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonvanishingReport {
    pub mode: ProbeMode,
    pub points: Vec<ProbePoint>,
    pub min_modulus: f64,
    pub max_modulus: f64,
}

/// bin2 Weyl moduli on the grid (case1) or at the points c <= G nearest each
/// grid value G where k h'(c) is an integer (case3).
pub fn nonvanishing_probe(h: &HardyExpr, k: i64, mode: ProbeMode, grid: &[u64]) -> Result<NonvanishingReport> {
    if k == 0 {
        return Err(Error::arg("frequency k must be nonzero"));
    }
    let class = classify_hardy(h)?;
    let want = match mode {
        ProbeMode::Case1 => 1,
        ProbeMode::Case3 => 3,
    };
    if class.case_id != want {
        return Err(Error::arg(format!("{h} is in growth case {}, probe expects case {want}", class.case_id)));
    }
    let targets: Vec<u64> = match mode {
        ProbeMode::Case1 => grid.to_vec(),
        ProbeMode::Case3 => {
            let g = h.differentiate(1)?;
            let kf = k as f64;
            grid.iter().filter_map(|&top| integer_slope_point(|x| kf * g.eval(x), top)).collect()
        }
    };
    let mut points = Vec::with_capacity(targets.len());
    for n in targets {
        let modulus = weyl_sum(WeylScheme::Bin2, ValueSource::Raw, h, k, n)?.norm();
        points.push(ProbePoint { n, modulus });
    }
    let min_modulus = points.iter().map(|p| p.modulus).fold(f64::INFINITY, f64::min);
    let max_modulus = points.iter().map(|p| p.modulus).fold(f64::NEG_INFINITY, f64::max);
    Ok(NonvanishingReport {
        mode,
        points,
        min_modulus,
        max_modulus,
    })
}

/// Largest-m root of g(c) = m on [2, top] for monotone g, rounded to an integer.
fn integer_slope_point<G: Fn(f64) -> f64>(g: G, top: u64) -> Option<u64> {
    let (lo, hi) = (2.0, top as f64);
    if hi <= lo {
        return None;
    }
    let (g_lo, g_hi) = (g(lo), g(hi));
    let m = if g_hi >= g_lo { g_hi.floor() } else { g_hi.ceil() };
    if (m - g_lo) * (m - g_hi) > 0.0 {
        return None;
    }
    let rising = g_hi >= g_lo;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (g(mid) < m) == rising {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some((0.5 * (a + b)).round().max(2.0) as u64)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoosReport {
    /// Statistic at N = 1..=N_max.
    pub values: Vec<f64>,
    pub running_sup: Vec<f64>,
    pub sup: f64,
}

impl BoosReport {
    pub fn at(&self, n: u64) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i as usize)).copied()
    }
}

/// sum_n W(n) |a(n, N)/dW(n) - a(n+1, N)/dW(n+1)| with a(n, N) = C(N, n) 2^-N
/// and W = e^{sqrt x}, for every N <= N_max.
pub fn boos_regularity_check(n_max: u64) -> Result<BoosReport> {
    if n_max == 0 || n_max > 10_000 {
        return Err(Error::arg(format!("N_max = {n_max} outside 1..=10000")));
    }
    // W(n)/dW(n) and W(n)/dW(n+1), via expm1 so that nothing overflows
    let len = n_max as usize + 2;
    let mut own = vec![0.0; len];
    let mut next = vec![0.0; len];
    for n in 1..len {
        let x = n as f64;
        own[n] = if n == 1 { 1.0 } else { -1.0 / ((x - 1.0).sqrt() - x.sqrt()).exp_m1() };
        next[n] = 1.0 / ((x + 1.0).sqrt() - x.sqrt()).exp_m1();
    }
    let mut values = Vec::with_capacity(n_max as usize);
    let mut running_sup = Vec::with_capacity(n_max as usize);
    let mut sup = 0.0f64;
    for order in 1..=n_max {
        let window = BinomialWindow::new(order)?;
        let start = window.lo().max(1);
        let mut acc = NeumaierSum::new();
        for n in start..=window.hi() {
            let a0 = window.weight(n);
            let a1 = if n < order { window.weight(n + 1) } else { 0.0 };
            acc.add((a0 * own[n as usize] - a1 * next[n as usize]).abs());
        }
        if start > 1 {
            // a(start - 1) is outside the window and treated as 0
            acc.add(window.weight(start) * next[start as usize - 1]);
        }
        let v = acc.value();
        sup = sup.max(v);
        values.push(v);
        running_sup.push(sup);
    }
    Ok(BoosReport { values, running_sup, sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averages::{binomial_weight_vectors, weighted_average, TestFunction};
    use crate::gaussian::l1_distance;
    use crate::hardy::parse_hardy;
    use crate::numeric::radical_inverse_base2;
    use crate::sieve::{sieve_theta, ThetaKind};

    fn h(s: &str) -> HardyExpr {
        parse_hardy(s).unwrap()
    }

    #[test]
    fn golden_rotation_cesaro_matches_closed_form() {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let n = 100_000u64;
        let s = weyl_sum(WeylScheme::Cesaro, ValueSource::Raw, &h("phi*x"), 1, n).unwrap();
        let pi = std::f64::consts::PI;
        let closed = ((pi * phi * n as f64).sin() / (n as f64 * (pi * phi).sin())).abs();
        assert!(s.norm() <= 1e-3);
        assert!((s.norm() - closed).abs() < 1e-9, "{} vs {closed}", s.norm());
    }

    #[test]
    fn cesaro_path_is_bit_identical_to_weighted_average() {
        let hx = h("sqrt2*x^1.5");
        for n in [1u64, 17, 1000, 12345] {
            let s = weyl_sum(WeylScheme::Cesaro, ValueSource::Raw, &hx, 3, n).unwrap();
            let table = WeightTable::build(&WeightExpr::Cesaro, n).unwrap();
            let f = TestFunction::exp_of_hardy(3, hx.clone()).unwrap();
            let r = weighted_average(&table, &f, n).unwrap();
            assert_eq!(s.re.to_bits(), r.value.re.to_bits());
            assert_eq!(s.im.to_bits(), r.value.im.to_bits());
        }
    }

    #[test]
    fn zero_phase_gives_weight_mass() {
        let zero = HardyExpr::zero();
        let n = 30;
        let c = weyl_sum(WeylScheme::Cesaro, ValueSource::Raw, &zero, 1, n).unwrap();
        assert!((c.re - 1.0).abs() < 1e-15);
        let b = weyl_sum(WeylScheme::Bin, ValueSource::Raw, &zero, 1, n).unwrap();
        assert!((b.re - (1.0 - 2f64.powi(-30))).abs() < 1e-15);
        let b2 = weyl_sum(WeylScheme::Bin2, ValueSource::Raw, &zero, 1, n).unwrap();
        assert!((b2.re - (1.0 - 2f64.powi(-30))).abs() < 1e-15);
        let w = WeightTable::build(&WeightExpr::Log, n).unwrap();
        let l = weyl_sum(WeylScheme::Weighted(&w), ValueSource::Raw, &zero, 1, n).unwrap();
        assert!((l.re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn half_rotation_cancels_under_bin2() {
        let s = weyl_sum(WeylScheme::Bin2, ValueSource::Raw, &h("x/2"), 1, 20).unwrap();
        assert_eq!(s.norm(), 0.0);
    }

    #[test]
    fn theta_source_uses_table_values() {
        let t = sieve_theta(ThetaKind::BigOmega, 2000).unwrap();
        let s = weyl_sum(WeylScheme::Cesaro, ValueSource::Theta(&t), &h("x/2"), 1, 1000).unwrap();
        let direct: f64 = (1..=1000).map(|n| if t.get(n).is_multiple_of(2) { 1.0 } else { -1.0 }).sum::<f64>() / 1000.0;
        assert!((s.re - direct).abs() < 1e-12);
        assert!(weyl_sum(WeylScheme::Bin2, ValueSource::Theta(&t), &h("x/2"), 1, 1500).is_err());
        assert!(weyl_sum(WeylScheme::Bin, ValueSource::Raw, &h("x"), 0, 10).is_err());
    }

    fn brute_discrepancy(s: &WeightedSample) -> f64 {
        let mut xs: Vec<f64> = (0..=4000).map(|i| i as f64 / 4000.0).collect();
        for &p in s.points() {
            xs.extend([p, (p + 1e-12).min(1.0)]);
        }
        xs.iter()
            .map(|&x| {
                let mass: f64 = s.points().iter().zip(s.weights()).filter(|(p, _)| **p < x).map(|(_, w)| w).sum();
                (mass - x).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn star_discrepancy_examples() {
        let one = WeightedSample::new(vec![0.5], vec![1.0]).unwrap();
        assert_eq!(star_discrepancy(&one).unwrap(), 0.5);
        let grid = WeightedSample::new((0..10).map(|j| j as f64 / 10.0).collect(), vec![0.1; 10]).unwrap();
        let d = star_discrepancy(&grid).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
        assert!((d - brute_discrepancy(&grid)).abs() < 1e-9);
        let zero = WeightedSample::new(vec![0.2, 0.7], vec![0.0, 0.0]).unwrap();
        assert_eq!(star_discrepancy(&zero).unwrap(), 1.0);
        assert!(star_discrepancy(&WeightedSample::new(vec![], vec![]).unwrap()).is_err());
        assert!(WeightedSample::new(vec![1.0], vec![1.0]).is_err());
        assert!(WeightedSample::new(vec![0.1, 0.2], vec![0.7, 0.7]).is_err());
    }

    #[test]
    fn star_discrepancy_matches_brute_force_with_ties() {
        let pts = vec![0.3, 0.3, 0.9, 0.05, 0.6];
        let s = WeightedSample::new(pts, vec![0.1, 0.3, 0.2, 0.15, 0.2]).unwrap();
        assert!((star_discrepancy(&s).unwrap() - brute_discrepancy(&s)).abs() < 1e-9);
    }

    #[test]
    fn scheme_samples_carry_scheme_mass() {
        let hx = h("sqrt2*x");
        let c = scheme_sample(WeylScheme::Cesaro, ValueSource::Raw, &hx, 1000).unwrap();
        let b2 = scheme_sample(WeylScheme::Bin2, ValueSource::Raw, &hx, 1000).unwrap();
        let mass = |s: &WeightedSample| s.weights().iter().sum::<f64>();
        assert!((mass(&c) - 1.0).abs() < 1e-12);
        assert!((mass(&b2) - 1.0).abs() < 1e-12);
        let w = weyl_sum(WeylScheme::Bin2, ValueSource::Raw, &hx, 1, 1000).unwrap();
        assert!((b2.weyl(1) - w).norm() < 1e-9);
        assert!(star_discrepancy(&c).unwrap() < 0.01);
    }

    #[test]
    fn koksma_sanity_bound() {
        let vals: Vec<f64> = (1..=1024).map(radical_inverse_base2).collect();
        let s = WeightedSample::uniform(&vals).unwrap();
        let eps = star_discrepancy(&s).unwrap();
        assert!(eps <= 0.01, "{eps}");
        let bound = 10.0 * (std::f64::consts::TAU * eps + 2.0 * eps);
        assert!(s.weyl(1).norm() <= bound);
    }

    #[test]
    fn interval_scan_x15() {
        let hx = h("x^1.5");
        let s: WeightExpr = "floor(x^0.8)".parse().unwrap();
        let grid = [12_500u64, 25_000, 50_000, 100_000];
        let rows = interval_weyl_scan(&hx, 1, &s, &grid).unwrap();
        assert!(rows.last().unwrap().modulus <= 0.1);
        assert!(rows.iter().all(|r| r.within_envelope), "{rows:?}");
        let zero = interval_weyl_scan(&h("0*x + 0"), 1, &s, &[1000]);
        if let Ok(z) = zero {
            assert!((z[0].modulus - 1.0).abs() < 1e-12);
        }
        assert!(interval_weyl_scan(&hx, 1, &"x".parse().unwrap(), &[100]).is_err());
    }

    #[test]
    fn interval_scan_trend_on_doubling() {
        let hx = h("x^1.5");
        let s: WeightExpr = "floor(x^0.8)".parse().unwrap();
        let grid: Vec<u64> = (0..6).map(|i| 10_000u64 << i).collect();
        let rows = interval_weyl_scan(&hx, 1, &s, &grid).unwrap();
        // the envelope decays; the modulus should follow it on average
        let first: f64 = rows[..3].iter().map(|r| r.modulus).sum();
        let last: f64 = rows[3..].iter().map(|r| r.modulus).sum();
        assert!(last < first, "{rows:?}");
    }

    #[test]
    fn case4_probe_hits() {
        let hx = h("x*log(x)/(2*pi)");
        let hits = case4_probe(&hx, 1, 200_000).unwrap();
        let ns: Vec<u64> = hits.iter().map(|h| h.n).collect();
        assert!(ns.iter().any(|&n| (190..=200).contains(&n)), "{ns:?}");
        let big: Vec<&Case4Hit> = hits.iter().filter(|h| h.n > 100_000).collect();
        assert!(!big.is_empty());
        for hit in &big {
            assert!((hit.n as f64 - 1.06e5).abs() < 2e3);
            assert!((hit.modulus - 2f64.powf(-0.25)).abs() <= 0.15);
            assert!((hit.predicted - 2f64.powf(-0.25)).abs() < 1e-12);
        }
        // ln N + 1 = 2 pi m
        for m in [1.0f64, 2.0] {
            let root = (std::f64::consts::TAU * m - 1.0).exp();
            assert!(ns.iter().any(|&n| (n as f64 - root).abs() <= 2.0));
        }
        assert!(case4_probe(&h("x^0.7"), 1, 100).is_err());
    }

    #[test]
    fn case1_probe_stays_away_from_zero() {
        let r = nonvanishing_probe(&h("x^0.4"), 1, ProbeMode::Case1, &[1000, 10_000, 100_000]).unwrap();
        assert!(r.min_modulus >= 0.2, "{r:?}");
        assert!(nonvanishing_probe(&h("x^0.7"), 1, ProbeMode::Case1, &[1000]).is_err());
    }

    #[test]
    fn case3_probe_finds_large_averages() {
        let hx = h("x*log(x)^(1/2)");
        let r = nonvanishing_probe(&hx, 1, ProbeMode::Case3, &[10_000, 50_000, 100_000]).unwrap();
        assert!(r.max_modulus >= 0.5, "{r:?}");
        let g = hx.differentiate(1).unwrap();
        for p in &r.points {
            assert!(dist_to_int(g.eval(p.n as f64)) <= g.differentiate(1).unwrap().eval(p.n as f64));
        }
        assert!(nonvanishing_probe(&h("x^1.5"), 1, ProbeMode::Case3, &[1000]).is_err());
    }

    #[test]
    fn integer_polynomial_is_unimodular() {
        let r = nonvanishing_probe(&h("x^2"), 1, ProbeMode::Case1, &[100, 5000]).unwrap();
        for p in &r.points {
            assert!((p.modulus - (1.0 - 2f64.powf(-(p.n as f64)))).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_line_bound() {
        // |h(n) - h(c) - h'(c)(n - c)| <= max|h''| (n - c)^2 / 2 on the window
        let hx = h("x*log(x)^(1/2)");
        let g1 = hx.differentiate(1).unwrap();
        let g2 = hx.differentiate(2).unwrap();
        let c = 40_000.0;
        for d in [-600.0f64, -50.0, 1.0, 77.0, 600.0] {
            let x = c + d;
            let gap = (hx.eval(x) - hx.eval(c) - g1.eval(c) * d).abs();
            let curv = g2.eval(c.min(x)).abs().max(g2.eval(c.max(x)).abs());
            assert!(gap <= curv * d * d / 2.0 + 1e-9);
        }
    }

    #[test]
    fn parity_neutrality_bound() {
        let n = 500;
        let (bin, bin2) = binomial_weight_vectors(n).unwrap();
        let l1 = l1_distance(&bin, &bin2);
        for hs in ["sqrt2*x^0.9", "x^0.3", "pi*x"] {
            let hx = h(hs);
            let a = weyl_sum(WeylScheme::Bin, ValueSource::Raw, &hx, 1, n).unwrap().norm();
            let b = weyl_sum(WeylScheme::Bin2, ValueSource::Raw, &hx, 1, n).unwrap().norm();
            assert!((a - b).abs() <= 2.0 * l1 + 1e-12);
        }
    }

    #[test]
    fn boos_statistic() {
        let r = boos_regularity_check(512).unwrap();
        assert!((r.values[0] - 0.5).abs() < 1e-15);
        let (v256, v512) = (r.at(256).unwrap(), r.at(512).unwrap());
        assert!(v512.is_finite() && v512 <= 2.0 * v256);
        assert!(r.running_sup.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.sup, *r.running_sup.last().unwrap());
        assert!(boos_regularity_check(10_001).is_err());
    }

    #[test]
    fn boos_matches_direct_sum_small_n() {
        // direct evaluation with exact binomials and plain exponentials
        let r = boos_regularity_check(30).unwrap();
        let w = |n: f64| (n.sqrt()).exp();
        let dw = |n: f64| if n == 1.0 { w(1.0) } else { w(n) - w(n - 1.0) };
        for order in [5u64, 17, 30] {
            let mut row = vec![1f64];
            for j in 0..order {
                row.push(row[j as usize] * (order - j) as f64 / (j + 1) as f64);
            }
            let scale = 2f64.powi(-(order as i32));
            let a = |n: u64| if n <= order { row[n as usize] * scale } else { 0.0 };
            let direct: f64 = (1..=order)
                .map(|n| {
                    let x = n as f64;
                    w(x) * (a(n) / dw(x) - a(n + 1) / dw(x + 1.0)).abs()
                })
                .sum();
            assert!((r.at(order).unwrap() - direct).abs() < 1e-10 * direct.max(1.0));
        }
    }
}

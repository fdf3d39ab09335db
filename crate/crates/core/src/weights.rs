//! Weight functions W, their tables of values and increments, empirical class
//! tests and right inverses.

use std::fmt;
use std::str::FromStr;

use num_traits::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy::{parse_hardy, HardyExpr, Q};

/// Values above e^LOG_SCALE_THRESHOLD are stored divided by W(N).
const LOG_SCALE_THRESHOLD: f64 = 600.0;

#[derive(Clone, Debug, PartialEq)]
pub enum WeightExpr {
    /// W(x) = x.
    Cesaro,
    /// W(x) = ln x for x >= 1, 0 below.
    Log,
    /// floor = true: floor(ln ln x) for x >= 16 and 1 below.
    /// floor = false: max(0, ln ln x), taken as 0 for x <= e.
    LogLog { floor: bool },
    /// W(x) = e^sqrt(x).
    ExpSqrt,
    /// W(x) = 2^x.
    Pow2,
    Hardy(HardyExpr),
    /// Compose(outer, inner) is outer(inner(x)).
    Compose(Box<WeightExpr>, Box<WeightExpr>),
    FloorOf(Box<WeightExpr>),
}

impl WeightExpr {
    pub fn compose(outer: WeightExpr, inner: WeightExpr) -> WeightExpr {
        WeightExpr::Compose(Box::new(outer), Box::new(inner))
    }

    pub fn floor_of(inner: WeightExpr) -> WeightExpr {
        WeightExpr::FloorOf(Box::new(inner))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            WeightExpr::Cesaro => x,
            WeightExpr::Log => {
                if x >= 1.0 {
                    x.ln()
                } else {
                    0.0
                }
            }
            WeightExpr::LogLog { floor: true } => {
                if x < 16.0 {
                    1.0
                } else {
                    x.ln().ln().floor()
                }
            }
            WeightExpr::LogLog { floor: false } => {
                if x > std::f64::consts::E {
                    x.ln().ln()
                } else {
                    0.0
                }
            }
            WeightExpr::ExpSqrt => x.max(0.0).sqrt().exp(),
            WeightExpr::Pow2 => x.exp2(),
            WeightExpr::Hardy(h) => h.eval(x),
            WeightExpr::Compose(o, i) => o.eval(i.eval(x)),
            WeightExpr::FloorOf(e) => e.eval(x).floor(),
        }
    }

    /// ln W(x), without overflow for the exponential weights.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match self {
            WeightExpr::ExpSqrt => x.max(0.0).sqrt(),
            WeightExpr::Pow2 => x * std::f64::consts::LN_2,
            WeightExpr::Compose(o, i) => o.ln_eval(i.eval(x)),
            _ => self.eval(x).ln(),
        }
    }

    /// W(x) * e^-scale.
    pub fn eval_scaled(&self, x: f64, scale: f64) -> f64 {
        if scale == 0.0 {
            return self.eval(x);
        }
        match self {
            WeightExpr::ExpSqrt | WeightExpr::Pow2 => (self.ln_eval(x) - scale).exp(),
            WeightExpr::Compose(o, i) => o.eval_scaled(i.eval(x), scale),
            _ => self.eval(x) * (-scale).exp(),
        }
    }

    /// Structural test for W(x) -> infinity.
    pub fn is_unbounded(&self) -> bool {
        match self {
            WeightExpr::Hardy(h) => h.leading().is_some_and(|t| {
                t.coeff_value() > 0.0 && (t.power().is_positive() || (t.power() == Q::from_integer(0) && t.log_power().is_positive()))
            }),
            WeightExpr::Compose(o, i) => o.is_unbounded() && i.is_unbounded(),
            WeightExpr::FloorOf(e) => e.is_unbounded(),
            _ => true,
        }
    }
}

impl fmt::Display for WeightExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightExpr::Cesaro => f.write_str("cesaro"),
            WeightExpr::Log => f.write_str("log"),
            WeightExpr::LogLog { floor: true } => f.write_str("floor(loglog(x))"),
            WeightExpr::LogLog { floor: false } => f.write_str("loglog(x)"),
            WeightExpr::ExpSqrt => f.write_str("exp(sqrt(x))"),
            WeightExpr::Pow2 => f.write_str("2^x"),
            WeightExpr::Hardy(h) => write!(f, "{h}"),
            WeightExpr::Compose(o, i) => write!(f, "compose({o}, {i})"),
            WeightExpr::FloorOf(e) => write!(f, "floor({e})"),
        }
    }
}

impl Serialize for WeightExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn strip_call<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    let rest = text.strip_prefix(name)?.trim_start();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    // reject "f(a)(b)" style inputs where the outer parens do not match
    let mut depth = 0i32;
    for c in inner.chars() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            _ => {}
        }
    }
    (depth == 0).then_some(inner)
}

fn split_top_level_comma(text: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some((&text[..i], &text[i + 1..])),
            _ => {}
        }
    }
    None
}

fn shift(err: Error, by: usize) -> Error {
    match err {
        Error::Parse { position, message } => Error::Parse {
            position: position + by,
            message,
        },
        other => other,
    }
}

fn parse_weight_at(raw: &str, offset: usize) -> Result<WeightExpr> {
    let lead = raw.len() - raw.trim_start().len();
    let text = raw.trim();
    let at = offset + lead;
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let builtin = match compact.to_ascii_lowercase().as_str() {
        "cesaro" => Some(WeightExpr::Cesaro),
        "log" => Some(WeightExpr::Log),
        "loglog" | "loglog(x)" => Some(WeightExpr::LogLog { floor: false }),
        "floor(loglog)" | "floor(loglog(x))" => Some(WeightExpr::LogLog { floor: true }),
        "exp(sqrt(x))" | "expsqrt" => Some(WeightExpr::ExpSqrt),
        "2^x" | "pow2" => Some(WeightExpr::Pow2),
        _ => None,
    };
    if let Some(w) = builtin {
        return Ok(w);
    }
    if let Some(inner) = strip_call(text, "compose") {
        let inner_at = at + text.find('(').unwrap_or(0) + 1;
        let (a, b) = split_top_level_comma(inner)
            .ok_or_else(|| Error::parse(inner_at, "compose() needs two arguments"))?;
        let outer = parse_weight_at(a, inner_at)?;
        let inner_expr = parse_weight_at(b, inner_at + a.len() + 1)?;
        return Ok(WeightExpr::compose(outer, inner_expr));
    }
    if let Some(inner) = strip_call(text, "floor") {
        let inner_at = at + text.find('(').unwrap_or(0) + 1;
        return Ok(WeightExpr::floor_of(parse_weight_at(inner, inner_at)?));
    }
    parse_hardy(text)
        .map(WeightExpr::Hardy)
        .map_err(|e| shift(e, at))
}

impl FromStr for WeightExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_weight_at(s, 0)
    }
}

/// W(1..N) and its increments, possibly divided by a common factor e^scale.
#[derive(Clone, Debug)]
pub struct WeightTable {
    spec: WeightExpr,
    log_scale: f64,
    w: Vec<f64>,
    dw: Vec<f64>,
    onset: u64,
}

impl WeightTable {
    pub fn build(spec: &WeightExpr, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("weight table length must be at least 1"));
        }
        let top = spec.ln_eval(n as f64);
        let log_scale = if top.is_finite() && top > LOG_SCALE_THRESHOLD {
            top
        } else {
            0.0
        };
        let len = usize::try_from(n).map_err(|_| Error::Resource(format!("N = {n} too large")))?;
        let mut w = Vec::new();
        w.try_reserve_exact(len)
            .map_err(|e| Error::Resource(format!("weight table of {n} entries: {e}")))?;
        let mut dw = Vec::new();
        dw.try_reserve_exact(len)
            .map_err(|e| Error::Resource(format!("weight table of {n} entries: {e}")))?;
        let mut prev = 0.0;
        for i in 1..=n {
            let v = spec.eval_scaled(i as f64, log_scale);
            if !v.is_finite() {
                return Err(Error::arg(format!("weight {spec} is not finite at n = {i}")));
            }
            w.push(v);
            dw.push(v - prev);
            prev = v;
        }
        let mut onset = 1;
        for i in (0..len).rev() {
            if dw[i] < 0.0 {
                onset = i as u64 + 2;
                break;
            }
        }
        Ok(Self {
            spec: spec.clone(),
            log_scale,
            w,
            dw,
            onset,
        })
    }

    pub fn spec(&self) -> &WeightExpr {
        &self.spec
    }

    pub fn limit(&self) -> u64 {
        self.w.len() as u64
    }

    /// Values are stored as W(n) * e^-log_scale.
    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn w(&self, n: u64) -> f64 {
        self.w[(n - 1) as usize]
    }

    pub fn dw(&self, n: u64) -> f64 {
        self.dw[(n - 1) as usize]
    }

    pub fn w_values(&self) -> &[f64] {
        &self.w
    }

    pub fn dw_values(&self) -> &[f64] {
        &self.dw
    }

    /// First index from which every increment is nonnegative.
    pub fn onset(&self) -> u64 {
        self.onset
    }

    /// Second difference, obtained by differencing the increments.
    pub fn second_difference(&self) -> Vec<f64> {
        difference(&self.dw)
    }

    pub fn third_difference(&self) -> Vec<f64> {
        difference(&difference(&self.dw))
    }
}

pub fn weight_table(spec: &WeightExpr, n: u64) -> Result<WeightTable> {
    WeightTable::build(spec, n)
}

/// Backward difference with the convention that the entry before index 0 is 0.
pub fn difference(v: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    v.iter()
        .map(|&x| {
            let d = x - prev;
            prev = x;
            d
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LimitEstimate {
    Finite(f64),
    PosInfinity,
    NegInfinity,
    Inconclusive,
}

/// Read a limit off a sequence sampled on a geometric grid. Monotone
/// sequences whose steps shrink geometrically are extrapolated; monotone
/// sequences whose steps do not shrink are reported as diverging.
pub fn estimate_limit(values: &[f64]) -> LimitEstimate {
    if values.len() < 3 || values.iter().any(|v| !v.is_finite()) {
        return LimitEstimate::Inconclusive;
    }
    let last = *values.last().unwrap();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let d: Vec<f64> = values.windows(2).map(|p| p[1] - p[0]).collect();
    if d.iter().all(|x| x.abs() <= 1e-9 * scale) {
        return LimitEstimate::Finite(last);
    }
    let rising = d.iter().all(|&x| x >= 0.0);
    let falling = d.iter().all(|&x| x <= 0.0);
    let k = d.len();
    if !(rising || falling) {
        return if d[k - 1].abs() < 0.25 * d[0].abs() {
            LimitEstimate::Finite(last)
        } else {
            LimitEstimate::Inconclusive
        };
    }
    let ratio = |i: usize| {
        if d[i - 1] == 0.0 {
            if d[i] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d[i].abs() / d[i - 1].abs()
        }
    };
    let q = (1..k).map(ratio).skip(k.saturating_sub(3)).fold(0.0f64, f64::max);
    if q < 0.9 {
        let tail = d[k - 1] * q / (1.0 - q);
        let limit = last + tail;
        // snap limits that are indistinguishable from zero at this resolution
        if limit.abs() <= d[k - 1].abs() {
            LimitEstimate::Finite(0.0)
        } else {
            LimitEstimate::Finite(limit)
        }
    } else if rising {
        LimitEstimate::PosInfinity
    } else {
        LimitEstimate::NegInfinity
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendReport {
    pub grid: Vec<u64>,
    pub values: Vec<f64>,
    pub limit: LimitEstimate,
}

impl TrendReport {
    fn sample(grid: Vec<u64>, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.iter().map(|&n| f(n as f64)).collect();
        let limit = estimate_limit(&values);
        Self { grid, values, limit }
    }
}

/// Empirical class membership. Every field is a finite-range estimate.
#[derive(Clone, Debug, Serialize)]
pub struct WeightClassification {
    pub in_w: bool,
    pub in_l: bool,
    pub wstar_limit: LimitEstimate,
    pub wstar_trend: TrendReport,
    pub log_w_over_log_n: TrendReport,
    pub log_w_over_n: TrendReport,
    pub empirical: bool,
}

fn geometric_grid(lo: u64, hi: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut x = lo as f64;
    while (x.round() as u64) < hi {
        grid.push(x.round() as u64);
        x *= 10f64.sqrt();
    }
    grid.push(hi);
    grid
}

pub fn classify_weight(spec: &WeightExpr, probe_max: u64) -> WeightClassification {
    let probe_max = probe_max.max(1_000);
    let start = probe_max / 2;
    let scale = {
        let top = spec.ln_eval(probe_max as f64);
        if top.is_finite() && top > LOG_SCALE_THRESHOLD {
            top
        } else {
            0.0
        }
    };
    let mut nondecreasing = true;
    let mut unit_steps = true;
    let mut prev = spec.eval_scaled(start as f64, scale);
    for n in start + 1..=probe_max {
        let v = spec.eval_scaled(n as f64, scale);
        let d = v - prev;
        if !(d >= 0.0) {
            nondecreasing = false;
        }
        if d != 0.0 && d != 1.0 {
            unit_steps = false;
        }
        prev = v;
    }
    let unbounded = spec.is_unbounded();
    let in_w = nondecreasing && unbounded;
    let in_l = in_w && unit_steps && scale == 0.0;

    // increments of slowly varying weights lose digits past ~1e5
    let wstar_grid = geometric_grid(1_000, probe_max.min(100_000));
    let wstar_trend = TrendReport::sample(wstar_grid, |x| {
        let s = spec.ln_eval(x);
        let s = if s.is_finite() && s > LOG_SCALE_THRESHOLD { s } else { 0.0 };
        let w0 = spec.eval_scaled(x, s);
        let w1 = spec.eval_scaled(x - 1.0, s);
        let w2 = spec.eval_scaled(x - 2.0, s);
        let d1 = w0 - w1;
        let d2 = d1 - (w1 - w2);
        x * d2 / d1
    });
    let grid = geometric_grid(1_000, probe_max);
    let log_w_over_log_n = TrendReport::sample(grid.clone(), |x| spec.ln_eval(x) / x.ln());
    let log_w_over_n = TrendReport::sample(grid, |x| spec.ln_eval(x) / x);
    WeightClassification {
        in_w,
        in_l,
        wstar_limit: wstar_trend.limit,
        wstar_trend,
        log_w_over_log_n,
        log_w_over_n,
        empirical: true,
    }
}

/// max{n : s(n) <= k} for nondecreasing integer-valued s.
pub fn right_inverse(s: &WeightExpr, k: u64) -> Result<u64> {
    let kf = k as f64;
    let at = |n: u64| s.eval(n as f64);
    if at(1) > kf {
        return Err(Error::arg(format!("k = {k} is below s(1) = {}", at(1))));
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while at(hi) <= kf {
        lo = hi;
        hi = hi
            .checked_mul(2)
            .filter(|&h| h < 1 << 62)
            .ok_or_else(|| Error::arg(format!("s never exceeds {k}")))?;
    }
    // invariant: s(lo) <= k < s(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if at(mid) <= kf {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> WeightExpr {
        s.parse().unwrap()
    }

    #[test]
    fn parse_builtins_and_composites() {
        assert_eq!(w("cesaro"), WeightExpr::Cesaro);
        assert_eq!(w("exp(sqrt(x))"), WeightExpr::ExpSqrt);
        assert_eq!(w("floor(loglog(x))"), WeightExpr::LogLog { floor: true });
        assert_eq!(
            w("compose(cesaro, floor(sqrt(x)))"),
            WeightExpr::compose(WeightExpr::Cesaro, WeightExpr::floor_of(WeightExpr::Hardy("x^(1/2)".parse().unwrap())))
        );
        for s in ["compose(log, floor(x^(1/2)))", "floor(loglog(x))", "2^x", "x^2 + 2*x"] {
            let e = w(s);
            assert_eq!(w(&e.to_string()), e);
        }
        match "compose(cesaro, x +* 2)".parse::<WeightExpr>() {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 19),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_examples() {
        let t = weight_table(&WeightExpr::Cesaro, 5).unwrap();
        assert_eq!(t.dw_values(), &[1.0; 5]);
        assert_eq!(t.w_values(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let t = weight_table(&WeightExpr::ExpSqrt, 4).unwrap();
        assert!((t.dw(4) - (2f64.exp() - 3f64.sqrt().exp())).abs() < 1e-12);
        let ll = WeightExpr::LogLog { floor: true };
        assert_eq!(ll.eval(15.0), 1.0);
        assert_eq!(ll.eval(1618.0), 1.0);
        assert_eq!(ll.eval(1619.0), 2.0);
    }

    #[test]
    fn telescoping_for_builtins() {
        for spec in [
            WeightExpr::Cesaro,
            WeightExpr::Log,
            WeightExpr::LogLog { floor: true },
            WeightExpr::LogLog { floor: false },
            WeightExpr::ExpSqrt,
            WeightExpr::Pow2,
            w("x^(1/2)*log(x)"),
        ] {
            let t = weight_table(&spec, 10_000).unwrap();
            let total = crate::numeric::compensated_sum(t.dw_values());
            let top = t.w(10_000);
            assert!((total - top).abs() <= 1e-12 * top.abs().max(1e-300), "{spec}");
        }
    }

    #[test]
    fn huge_weights_are_scaled() {
        let t = weight_table(&WeightExpr::ExpSqrt, 1_000_000).unwrap();
        assert_eq!(t.log_scale(), 1000.0);
        assert!((t.w(1_000_000) - 1.0).abs() < 1e-15);
        let t = weight_table(&WeightExpr::Pow2, 5000).unwrap();
        assert!((t.dw(5000) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn differencing_agrees_with_direct_differences() {
        let t = weight_table(&w("x^3 - x"), 200).unwrap();
        let v = t.w_values();
        let d2 = t.second_difference();
        let d3 = t.third_difference();
        for i in 3..200 {
            assert_eq!(d2[i], (v[i] - v[i - 1]) - (v[i - 1] - v[i - 2]));
            assert_eq!(
                d3[i],
                ((v[i] - v[i - 1]) - (v[i - 1] - v[i - 2])) - ((v[i - 1] - v[i - 2]) - (v[i - 2] - v[i - 3]))
            );
        }
    }

    #[test]
    fn composition_is_pointwise() {
        let inner = w("floor(x^(1/2))");
        let outer = WeightExpr::Log;
        let t = weight_table(&WeightExpr::compose(outer.clone(), inner.clone()), 5000).unwrap();
        for n in 1..=5000u64 {
            let direct = outer.eval(inner.eval(n as f64));
            assert!((t.w(n) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn classification_examples() {
        let c = classify_weight(&WeightExpr::Cesaro, 100_000);
        assert!(c.in_w && c.in_l);
        assert_eq!(c.wstar_limit, LimitEstimate::Finite(0.0));

        let c = classify_weight(&WeightExpr::LogLog { floor: true }, 10_000);
        assert!(c.in_l);
        assert!(classify_weight(&w("floor(x^(1/2))"), 10_000).in_l);

        match classify_weight(&WeightExpr::Log, 100_000).wstar_limit {
            LimitEstimate::Finite(v) => assert!((v + 1.0).abs() < 1e-3, "{v}"),
            other => panic!("{other:?}"),
        }

        let c = classify_weight(&WeightExpr::ExpSqrt, 1_000_000);
        assert!(c.in_w);
        assert_eq!(c.wstar_limit, LimitEstimate::PosInfinity);
        assert_eq!(c.log_w_over_log_n.limit, LimitEstimate::PosInfinity);
        assert_eq!(c.log_w_over_n.limit, LimitEstimate::Finite(0.0));

        let c = classify_weight(&w("x^(-1)"), 10_000);
        assert!(!c.in_w);
    }

    #[test]
    fn right_inverse_examples() {
        let s = w("floor(sqrt(x))");
        assert_eq!(right_inverse(&s, 2).unwrap(), 8);
        for k in [1u64, 5, 77] {
            assert_eq!(right_inverse(&WeightExpr::Cesaro, k).unwrap(), k);
        }
        let ll = WeightExpr::LogLog { floor: true };
        let n = right_inverse(&ll, 2).unwrap();
        assert!(((n as f64).ln().ln()) < 3.0 && ((n as f64 + 1.0).ln().ln()) >= 3.0);
        assert_eq!(n, (3f64.exp().exp()).ceil() as u64 - 1);
        assert!(right_inverse(&w("x + 5"), 2).is_err());
    }

    #[test]
    fn level_sets_are_intervals_between_right_inverses() {
        let s = w("floor(sqrt(x))");
        let mut prev = 0;
        for k in 1..=100u64 {
            let hi = right_inverse(&s, k).unwrap();
            for n in 1..=10_000u64 {
                let inside = (s.eval(n as f64) as u64) == k;
                assert_eq!(inside, n > prev && n <= hi, "k={k} n={n}");
            }
            prev = hi;
        }
    }
}

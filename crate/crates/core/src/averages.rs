//! Weighted, binomial and interval averages, and the comparators built on
//! them.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy::{parse_hardy, HardyExpr};
use crate::numeric::{BinomialWindow, ComplexSum, NeumaierSum};
use crate::sieve::ThetaTable;
use crate::weights::{classify_weight, right_inverse, WeightClassification, WeightExpr, WeightTable};

/// A function on the naturals bounded by 1 in modulus.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// n -> e^{2 pi i k h(n)}.
    ExpOfHardy { k: i64, h: HardyExpr },
    /// Indicator of n = residue (mod modulus).
    Residue { modulus: u64, residue: u64 },
    /// n -> (-1)^n.
    Parity,
    Constant(Complex64),
    /// Entry j holds f(j + 1); f vanishes beyond the table and at 0.
    Table(Arc<[Complex64]>),
}

impl TestFunction {
    pub fn exp_of_hardy(k: i64, h: HardyExpr) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("frequency k must be nonzero"));
        }
        Ok(TestFunction::ExpOfHardy { k, h })
    }

    pub fn residue(modulus: u64, residue: u64) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::arg(format!("modulus must be at least 2, got {modulus}")));
        }
        Ok(TestFunction::Residue {
            modulus,
            residue: residue % modulus,
        })
    }

    pub fn constant(c: Complex64) -> Result<Self> {
        if !(c.norm() <= 1.0 + 1e-12) {
            return Err(Error::arg(format!("constant {c} has modulus above 1")));
        }
        Ok(TestFunction::Constant(c))
    }

    pub fn table(values: Vec<Complex64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.norm() <= 1.0 + 1e-12)) {
            return Err(Error::arg(format!("table entry {} = {v} has modulus above 1", i + 1)));
        }
        Ok(TestFunction::Table(values.into()))
    }

    pub fn real_table(values: &[f64]) -> Result<Self> {
        Self::table(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Reads one value per line, either "re" or "re,im"; '#' starts a comment.
    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::arg(format!("{}:{}: expected re or re,im", path.display(), lineno + 1));
            let mut parts = line.split(',').map(str::trim);
            let re: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let im: f64 = match parts.next() {
                Some(p) => p.parse().map_err(|_| bad())?,
                None => 0.0,
            };
            if parts.next().is_some() {
                return Err(bad());
            }
            values.push(Complex64::new(re, im));
        }
        Self::table(values)
    }

    #[inline]
    pub fn eval(&self, n: u64) -> Complex64 {
        match self {
            TestFunction::ExpOfHardy { k, h } => {
                let z = h.phase(*k, n as f64);
                if z.re.is_finite() {
                    z
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            TestFunction::Residue { modulus, residue } => {
                if n % modulus == *residue {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            TestFunction::Parity => Complex64::new(if n.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0),
            TestFunction::Constant(c) => *c,
            TestFunction::Table(v) => {
                if n >= 1 && n <= v.len() as u64 {
                    v[(n - 1) as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    /// f(0), ..., f(max) for composing with small-valued tables.
    pub fn tabulate(&self, max: u64) -> Vec<Complex64> {
        (0..=max).map(|v| self.eval(v)).collect()
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::ExpOfHardy { k: 1, h } => write!(f, "exp({h})"),
            TestFunction::ExpOfHardy { k, h } => write!(f, "exp({h}, {k})"),
            TestFunction::Residue { modulus, residue } => write!(f, "residue({modulus},{residue})"),
            TestFunction::Parity => f.write_str("parity"),
            TestFunction::Constant(c) => write!(f, "const({},{})", c.re, c.im),
            TestFunction::Table(v) => write!(f, "table[{}]", v.len()),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// exp(h), exp(h, k), residue(m,r), parity, const(re[,im]), table:path.
    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim();
        if let Some(path) = text.strip_prefix("table:") {
            return Self::load_table(Path::new(path.trim()));
        }
        let (name, args) = match text.find('(') {
            Some(i) if text.ends_with(')') => (text[..i].trim(), &text[i + 1..text.len() - 1]),
            _ => (text, ""),
        };
        let args_at = text.find('(').map_or(0, |i| i + 1);
        let ints = |args: &str| -> Result<Vec<i64>> {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::parse(args_at, format!("expected integers in '{args}'")))
                })
                .collect()
        };
        match name {
            "parity" => Ok(TestFunction::Parity),
            "one" => Ok(TestFunction::Constant(Complex64::new(1.0, 0.0))),
            "residue" => match ints(args)?.as_slice() {
                [m, r] if *m >= 2 => Self::residue(*m as u64, r.rem_euclid(*m) as u64),
                _ => Err(Error::parse(args_at, "residue(m, r) needs m >= 2")),
            },
            "const" => {
                let parts: Vec<f64> = args
                    .split(',')
                    .map(|a| a.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(args_at, "const(re[, im]) needs numbers"))?;
                match parts.as_slice() {
                    [re] => Self::constant(Complex64::new(*re, 0.0)),
                    [re, im] => Self::constant(Complex64::new(*re, *im)),
                    _ => Err(Error::parse(args_at, "const(re[, im]) takes one or two numbers")),
                }
            }
            "exp" => {
                let (h_text, k) = match args.rsplit_once(',') {
                    Some((h, k)) => (
                        h,
                        k.trim()
                            .parse::<i64>()
                            .map_err(|_| Error::parse(args_at + h.len() + 1, "expected integer frequency"))?,
                    ),
                    None => (args, 1),
                };
                let h = parse_hardy(h_text).map_err(|e| match e {
                    Error::Parse { position, message } => Error::parse(position + args_at, message),
                    other => other,
                })?;
                Self::exp_of_hardy(k, h)
            }
            _ => Err(Error::parse(0, format!("unknown test function '{text}'"))),
        }
    }
}

/// One evaluated average.
#[derive(Clone, Debug)]
pub struct AverageReport {
    pub scheme: String,
    pub n: u64,
    pub value: Complex64,
    pub truncation_bound: f64,
    pub elapsed: Duration,
}

#[derive(Serialize)]
struct AverageRecord<'a> {
    scheme: &'a str,
    #[serde(rename = "N")]
    n: u64,
    re: f64,
    im: f64,
    truncation_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ns: Option<u128>,
}

impl AverageReport {
    pub const CSV_COLUMNS: [&'static str; 6] = ["scheme", "N", "re", "im", "truncation_bound", "elapsed_ns"];

    fn record(&self, with_elapsed: bool) -> AverageRecord<'_> {
        AverageRecord {
            scheme: &self.scheme,
            n: self.n,
            re: self.value.re,
            im: self.value.im,
            truncation_bound: self.truncation_bound,
            elapsed_ns: with_elapsed.then_some(self.elapsed.as_nanos()),
        }
    }

    /// CSV fields in `CSV_COLUMNS` order; elapsed time only on request.
    pub fn csv_fields(&self, with_elapsed: bool) -> Vec<String> {
        let mut v = vec![
            self.scheme.clone(),
            self.n.to_string(),
            format!("{:e}", self.value.re),
            format!("{:e}", self.value.im),
            format!("{:e}", self.truncation_bound),
        ];
        if with_elapsed {
            v.push(self.elapsed.as_nanos().to_string());
        }
        v
    }

    pub fn to_json(&self, with_elapsed: bool) -> serde_json::Value {
        serde_json::to_value(self.record(with_elapsed)).expect("plain record serializes")
    }
}

fn check_range(w: &WeightTable, n: u64) -> Result<()> {
    if n == 0 || n > w.limit() {
        return Err(Error::arg(format!("N = {n} outside weight table range 1..={}", w.limit())));
    }
    Ok(())
}

/// (1/W(N)) sum_{n <= N} dW(n) f(n) for any f.
pub fn weighted_mean_with<F: Fn(u64) -> Complex64>(w: &WeightTable, n: u64, f: F) -> Result<Complex64> {
    check_range(w, n)?;
    let top = w.w(n);
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::DegenerateWeight { n, value: top });
    }
    let mut acc = ComplexSum::new();
    for (i, &d) in w.dw_values()[..n as usize].iter().enumerate() {
        if d != 0.0 {
            acc.add(f(i as u64 + 1) * d);
        }
    }
    Ok(acc.value() / top)
}

pub fn weighted_average(w: &WeightTable, f: &TestFunction, n: u64) -> Result<AverageReport> {
    let start = Instant::now();
    let value = weighted_mean_with(w, n, |i| f.eval(i))?;
    Ok(AverageReport {
        scheme: format!("weighted[{}]", w.spec()),
        n,
        value,
        truncation_bound: 0.0,
        elapsed: start.elapsed(),
    })
}

/// Plain mean (1/N) sum_{n <= N} f(n), without building a weight table.
pub fn cesaro_mean_with<F: Fn(u64) -> Complex64>(n: u64, f: F) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::DegenerateWeight { n, value: 0.0 });
    }
    let mut acc = ComplexSum::new();
    for i in 1..=n {
        acc.add(f(i));
    }
    Ok(acc.value() / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BinomialMode {
    /// 2^-N sum_{n=1}^{N} C(N, n) f(n).
    Bin,
    /// 2^-(N+1) sum_{n=1}^{2N} C(N, floor(n/2)) f(n).
    Bin2,
}

impl fmt::Display for BinomialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinomialMode::Bin => "bin",
            BinomialMode::Bin2 => "bin2",
        })
    }
}

impl FromStr for BinomialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bin" => Ok(BinomialMode::Bin),
            "bin2" | "2bin" => Ok(BinomialMode::Bin2),
            other => Err(Error::arg(format!("unknown binomial mode '{other}'"))),
        }
    }
}

/// Binomial mean over a precomputed window; returns (value, truncation bound).
pub fn binomial_mean_on<F: Fn(u64) -> Complex64>(window: &BinomialWindow, mode: BinomialMode, f: F) -> (Complex64, f64) {
    let m = window.order();
    let mut acc = ComplexSum::new();
    match mode {
        BinomialMode::Bin => {
            for (j, p) in window.iter() {
                if j >= 1 {
                    acc.add(f(j) * p);
                }
            }
        }
        BinomialMode::Bin2 => {
            // pair 2j with 2j+1 before weighting so that (-1)^n cancels exactly
            for (j, p) in window.iter() {
                let half = 0.5 * p;
                let even = if j >= 1 { f(2 * j) } else { Complex64::new(0.0, 0.0) };
                let odd = if j < m { f(2 * j + 1) } else { Complex64::new(0.0, 0.0) };
                acc.add((even + odd) * half);
            }
        }
    }
    (acc.value(), window.truncation_bound())
}

pub fn binomial_mean_with<F: Fn(u64) -> Complex64>(mode: BinomialMode, n: u64, f: F) -> Result<(Complex64, f64)> {
    if n == 0 {
        return Err(Error::arg("binomial mean needs N >= 1"));
    }
    let window = BinomialWindow::new(n)?;
    Ok(binomial_mean_on(&window, mode, f))
}

pub fn binomial_average(mode: BinomialMode, f: &TestFunction, n: u64) -> Result<AverageReport> {
    let start = Instant::now();
    let (value, truncation_bound) = binomial_mean_with(mode, n, |i| f.eval(i))?;
    Ok(AverageReport {
        scheme: mode.to_string(),
        n,
        value,
        truncation_bound,
        elapsed: start.elapsed(),
    })
}

/// Weight of each n = 1..=2N under bin (zero beyond N) and bin2.
pub fn binomial_weight_vectors(n: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let window = BinomialWindow::new(n)?;
    let len = 2 * n as usize;
    let mut bin = vec![0.0; len];
    let mut bin2 = vec![0.0; len];
    for (j, p) in window.iter() {
        if j >= 1 {
            bin[(j - 1) as usize] = p;
            bin2[(2 * j - 1) as usize] = 0.5 * p;
        }
        if j < n {
            bin2[(2 * j) as usize] = 0.5 * p;
        }
    }
    Ok((bin, bin2))
}

/// (1/(b - a + 1)) sum_{n=a}^{b} f(n).
pub fn interval_average(f: &TestFunction, a: u64, b: u64) -> Result<Complex64> {
    interval_mean_with(a, b, |n| f.eval(n))
}

pub fn interval_mean_with<F: Fn(u64) -> Complex64>(a: u64, b: u64, f: F) -> Result<Complex64> {
    if a == 0 {
        return Err(Error::arg("interval must start at 1 or later"));
    }
    if b < a {
        return Err(Error::arg(format!("empty interval [{a}, {b}]")));
    }
    let mut acc = ComplexSum::new();
    for n in a..=b {
        acc.add(f(n));
    }
    Ok(acc.value() / (b - a + 1) as f64)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
}

/// sum_{n<=N} (x(n) - x(n-1)) y(n) against x(N) y(N) - sum_{n<N} x(n) (y(n+1) - y(n)),
/// with x(0) = 0 and x(n) = x[n - 1].
pub fn summation_by_parts_check(x: &[f64], y: &[f64], n: usize) -> Result<IdentityCheck> {
    if n == 0 || x.len() < n || y.len() < n {
        return Err(Error::arg(format!("need sequences of length >= N = {n}")));
    }
    let mut lhs = NeumaierSum::new();
    let mut prev = 0.0;
    for i in 0..n {
        lhs.add((x[i] - prev) * y[i]);
        prev = x[i];
    }
    let mut tail = NeumaierSum::new();
    for i in 0..n - 1 {
        tail.add(x[i] * (y[i + 1] - y[i]));
    }
    let lhs = lhs.value();
    let rhs = x[n - 1] * y[n - 1] - tail.value();
    Ok(IdentityCheck {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).abs(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExchangeReport {
    /// E_{n<=N} E^bin_{k<=n} f.
    pub v1: Complex64,
    /// E^bin_{n<=N} E_{k<=n} f.
    pub v2: Complex64,
    /// E_{n<=N/2} f.
    pub v3: Complex64,
    /// v1 with the index-shifted binomial rows 2^-(n-1) C(n-1, k-1).
    pub shifted_v1: Complex64,
    /// v2 with the index-shifted outer row 2^-(N-1) C(N-1, n-1).
    pub shifted_v2: Complex64,
}

/// Precomputed column sums so many functions can be exchanged at one N.
pub struct ExchangePlan {
    n: u64,
    column: Vec<f64>,
    shifted_column: Vec<f64>,
    outer: BinomialWindow,
    shifted_outer: BinomialWindow,
}

impl ExchangePlan {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::arg("exchange check needs N >= 2"));
        }
        let len = n as usize;
        let mut column = vec![NeumaierSum::new(); len];
        let mut shifted_column = vec![NeumaierSum::new(); len];
        for m in 1..=n {
            let row = BinomialWindow::new(m)?;
            for (k, p) in row.iter() {
                if k >= 1 {
                    column[(k - 1) as usize].add(p);
                }
            }
            let shifted = BinomialWindow::new(m - 1)?;
            for (k, p) in shifted.iter() {
                shifted_column[k as usize].add(p);
            }
        }
        Ok(Self {
            n,
            column: column.iter().map(NeumaierSum::value).collect(),
            shifted_column: shifted_column.iter().map(NeumaierSum::value).collect(),
            outer: BinomialWindow::new(n)?,
            shifted_outer: BinomialWindow::new(n - 1)?,
        })
    }

    pub fn evaluate(&self, f: &TestFunction) -> ExchangeReport {
        let n = self.n as usize;
        let vals: Vec<Complex64> = (1..=self.n).map(|k| f.eval(k)).collect();
        let mut prefix_means = Vec::with_capacity(n);
        let mut running = ComplexSum::new();
        for (i, v) in vals.iter().enumerate() {
            running.add(*v);
            prefix_means.push(running.value() / (i + 1) as f64);
        }
        let column_mean = |col: &[f64]| {
            let mut acc = ComplexSum::new();
            for (c, v) in col.iter().zip(&vals) {
                acc.add(v * c);
            }
            acc.value() / self.n as f64
        };
        let mut v2 = ComplexSum::new();
        for (j, p) in self.outer.iter() {
            if j >= 1 {
                v2.add(prefix_means[(j - 1) as usize] * p);
            }
        }
        let mut shifted_v2 = ComplexSum::new();
        for (j, p) in self.shifted_outer.iter() {
            shifted_v2.add(prefix_means[j as usize] * p);
        }
        let half = n / 2;
        let v3 = if half == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            prefix_means[half - 1]
        };
        ExchangeReport {
            v1: column_mean(&self.column),
            v2: v2.value(),
            v3,
            shifted_v1: column_mean(&self.shifted_column),
            shifted_v2: shifted_v2.value(),
        }
    }
}

pub fn exchange_check(f: &TestFunction, n: u64) -> Result<ExchangeReport> {
    Ok(ExchangePlan::new(n)?.evaluate(f))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChangeOfVariablesReport {
    pub n: u64,
    pub s_of_n: u64,
    pub image_point: bool,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
    pub envelope: f64,
}

fn s_int(s: &WeightExpr, n: u64) -> u64 {
    s.eval(n as f64).max(0.0) as u64
}

/// E^{W o s}_{n<=N} f(s(n)) against E^W_{k<=s(N)} f(k).
///
/// The envelope is 2 dW(s(N)) / W(s(N)), the change-of-variables error bound
/// with W o s in the role of the outer weight.
pub fn change_of_variables_check(w: &WeightExpr, s: &WeightExpr, f: &TestFunction, n: u64) -> Result<ChangeOfVariablesReport> {
    let sn = s_int(s, n);
    if sn == 0 {
        return Err(Error::arg(format!("s(N) = 0 at N = {n}")));
    }
    let composed = WeightTable::build(&WeightExpr::compose(w.clone(), s.clone()), n)?;
    let lhs = weighted_mean_with(&composed, n, |i| f.eval(s_int(s, i)))?;
    let outer = WeightTable::build(w, sn)?;
    let rhs = weighted_mean_with(&outer, sn, |k| f.eval(k))?;
    let envelope = 2.0 * outer.dw(sn) / outer.w(sn);
    let image_point = right_inverse(s, sn)? == n;
    Ok(ChangeOfVariablesReport {
        n,
        s_of_n: sn,
        image_point,
        lhs,
        rhs,
        abs_diff: (lhs - rhs).norm(),
        envelope,
    })
}

/// E^W_{n<=N} f(s(n)) against E^{W o s_hat}_{k<=s(N)} f(k) for every N up to
/// `n_max`, in one pass. Envelope: 2 d(W o s_hat)(s(N)) / W(N).
pub fn change_of_variables_sweep(w: &WeightExpr, s: &WeightExpr, f: &TestFunction, n_max: u64) -> Result<Vec<ChangeOfVariablesReport>> {
    let table = WeightTable::build(w, n_max)?;
    if table.log_scale() != 0.0 {
        return Err(Error::arg("change-of-variables sweep needs an unscaled weight table"));
    }
    let s_top = s_int(s, n_max);
    if s_int(s, 1) == 0 {
        return Err(Error::arg("s(1) = 0"));
    }
    // W(s_hat(k)) for k = 0..=s(N_max); s_hat(0) taken as 0 with W(0) = 0
    let mut w_hat = vec![0.0; s_top as usize + 1];
    let mut s_hat = vec![0u64; s_top as usize + 1];
    for k in s_int(s, 1)..=s_top {
        s_hat[k as usize] = right_inverse(s, k)?;
        w_hat[k as usize] = w.eval(s_hat[k as usize] as f64);
    }
    let mut rhs_sums = vec![Complex64::new(0.0, 0.0); s_top as usize + 1];
    let mut acc = ComplexSum::new();
    for k in 1..=s_top as usize {
        acc.add(f.eval(k as u64) * (w_hat[k] - w_hat[k - 1]));
        rhs_sums[k] = acc.value();
    }
    let mut out = Vec::with_capacity(n_max as usize);
    let mut lhs_acc = ComplexSum::new();
    for n in 1..=n_max {
        let sn = s_int(s, n);
        lhs_acc.add(f.eval(sn) * table.dw(n));
        let top = table.w(n);
        if top <= 0.0 {
            return Err(Error::DegenerateWeight { n, value: top });
        }
        let k = sn as usize;
        let lhs = lhs_acc.value() / top;
        let rhs = rhs_sums[k] / w_hat[k];
        out.push(ChangeOfVariablesReport {
            n,
            s_of_n: sn,
            image_point: s_hat[k] == n,
            lhs,
            rhs,
            abs_diff: (lhs - rhs).norm(),
            envelope: 2.0 * (w_hat[k] - w_hat[k - 1]) / top,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum NestedInner {
    /// n -> E_{k<=n} f(k).
    CesaroPrefix,
    /// n -> E^2bin_{k<=L(n)} f(k).
    Bin2OfL(WeightExpr),
}

/// Memoized n -> E^2bin_{k <= L(n)} f(k), keyed by the integer L(n).
struct Bin2OfLCache<'a> {
    l: &'a WeightExpr,
    f: &'a dyn Fn(u64) -> Complex64,
    last_key: Option<u64>,
    last: (Complex64, f64),
    worst_bound: f64,
}

impl<'a> Bin2OfLCache<'a> {
    fn get(&mut self, n: u64) -> Result<Complex64> {
        let key = self.l.eval(n as f64).max(0.0).floor() as u64;
        if self.last_key != Some(key) {
            self.last = if key == 0 {
                (Complex64::new(0.0, 0.0), 0.0)
            } else {
                binomial_mean_with(BinomialMode::Bin2, key, self.f)?
            };
            self.worst_bound = self.worst_bound.max(self.last.1);
            self.last_key = Some(key);
        }
        Ok(self.last.0)
    }
}

fn nested_mean(w: &WeightTable, inner: &NestedInner, f: &dyn Fn(u64) -> Complex64, n: u64) -> Result<(Complex64, f64)> {
    check_range(w, n)?;
    let top = w.w(n);
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::DegenerateWeight { n, value: top });
    }
    let mut acc = ComplexSum::new();
    match inner {
        NestedInner::CesaroPrefix => {
            let mut prefix = ComplexSum::new();
            for i in 1..=n {
                prefix.add(f(i));
                let d = w.dw(i);
                if d != 0.0 {
                    acc.add(prefix.value() / i as f64 * d);
                }
            }
            Ok((acc.value() / top, 0.0))
        }
        NestedInner::Bin2OfL(l) => {
            let mut cache = Bin2OfLCache {
                l,
                f,
                last_key: None,
                last: (Complex64::new(0.0, 0.0), 0.0),
                worst_bound: 0.0,
            };
            for i in 1..=n {
                let d = w.dw(i);
                if d != 0.0 {
                    acc.add(cache.get(i)? * d);
                }
            }
            Ok((acc.value() / top, cache.worst_bound))
        }
    }
}

pub fn nested_average(w: &WeightExpr, inner: &NestedInner, f: &TestFunction, n: u64) -> Result<AverageReport> {
    if n < 2 {
        return Err(Error::arg("nested average needs N >= 2"));
    }
    let start = Instant::now();
    let table = WeightTable::build(w, n)?;
    let (value, truncation_bound) = nested_mean(&table, inner, &|i| f.eval(i), n)?;
    let inner_name = match inner {
        NestedInner::CesaroPrefix => "cesaro".to_string(),
        NestedInner::Bin2OfL(l) => format!("bin2[L={l}]"),
    };
    Ok(AverageReport {
        scheme: format!("weighted[{w}] of {inner_name}"),
        n,
        value,
        truncation_bound,
        elapsed: start.elapsed(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MainPart {
    Cesaro,
    Log,
    Loglog,
}

impl MainPart {
    /// Identifier of the equivalence this part instantiates.
    pub fn tag(self) -> &'static str {
        match self {
            MainPart::Cesaro => "eq_main_cesaro_scale",
            MainPart::Log => "eq_main_log_scale",
            MainPart::Loglog => "eq_main_loglog_scale",
        }
    }
}

impl FromStr for MainPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cesaro" => Ok(MainPart::Cesaro),
            "log" => Ok(MainPart::Log),
            "loglog" => Ok(MainPart::Loglog),
            other => Err(Error::arg(format!("unknown part '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MainComparison {
    pub part: MainPart,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L_of_N")]
    pub l_of_n: u64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
    pub truncation_bound: f64,
    /// Advisory: empirical class tests for W (not enforced).
    pub w_class: Option<WeightClassification>,
    pub l_in_scale_class: bool,
}

/// Evaluate both sides of one part of the main equivalence.
pub fn compare_main_theorem(
    part: MainPart,
    theta: &ThetaTable,
    l: &WeightExpr,
    w: &WeightExpr,
    f: &TestFunction,
    n: u64,
) -> Result<MainComparison> {
    if n == 0 || n > theta.limit() {
        return Err(Error::arg(format!("N = {n} outside theta table range 1..={}", theta.limit())));
    }
    let l_top = l.eval(n as f64).floor();
    if !(l_top >= 1.0) {
        return Err(Error::arg(format!("L(N) = {l_top} < 1 at N = {n}")));
    }
    let l_of_n = l_top as u64;
    let memo = f.tabulate(theta.max_value() as u64);
    let f_theta = |i: u64| memo[theta.get(i) as usize];
    let f_plain = |k: u64| f.eval(k);

    let (lhs, rhs, truncation_bound) = match part {
        MainPart::Cesaro => {
            let lhs = cesaro_mean_with(n, f_theta)?;
            let (rhs, bound) = binomial_mean_with(BinomialMode::Bin2, l_of_n, f_plain)?;
            (lhs, rhs, bound)
        }
        MainPart::Log => {
            let table = WeightTable::build(w, n)?;
            let lhs = weighted_mean_with(&table, n, f_theta)?;
            let (rhs, bound) = nested_mean(&table, &NestedInner::Bin2OfL(l.clone()), &f_plain, n)?;
            (lhs, rhs, bound)
        }
        MainPart::Loglog => {
            let composed = WeightTable::build(&WeightExpr::compose(w.clone(), l.clone()), n)?;
            let lhs = weighted_mean_with(&composed, n, f_theta)?;
            let outer = WeightTable::build(w, l_of_n)?;
            let rhs = weighted_mean_with(&outer, l_of_n, f_plain)?;
            (lhs, rhs, 0.0)
        }
    };
    let w_class = match part {
        MainPart::Cesaro => None,
        _ => Some(classify_weight(w, 10_000)),
    };
    Ok(MainComparison {
        part,
        n,
        l_of_n,
        lhs,
        rhs,
        abs_diff: (lhs - rhs).norm(),
        truncation_bound,
        w_class,
        l_in_scale_class: classify_weight(l, 10_000).in_l,
    })
}

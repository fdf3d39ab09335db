//! Python bindings: thin wrappers over omega-lab-core taking expressions as
//! strings, returning numbers, complex values, lists and dicts.

use num_complex::Complex64;
use omega_lab_core::averages::{self, BinomialMode, MainPart, TestFunction};
use omega_lab_core::hardy::{self, HardyExpr};
use omega_lab_core::sieve::{self, SyntheticScale, ThetaKind, ThetaTable};
use omega_lab_core::ud_lab::{self, ValueSource, WeightedSample, WeylScheme};
use omega_lab_core::weights::{WeightExpr, WeightTable};
use omega_lab_core::{gaussian, Error};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Argument(_) | Error::Parse { .. } | Error::DegenerateWeight { .. } => PyValueError::new_err(e.to_string()),
        Error::Io(_) | Error::CorruptCache(_) | Error::IncompatibleCache(_) => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn theta(kind: &str, n: u64, l: Option<&str>, scale: &str) -> PyResult<ThetaTable> {
    let kind: ThetaKind = parse(kind)?;
    if kind == ThetaKind::Synthetic {
        let l: WeightExpr = parse(l.ok_or_else(|| PyValueError::new_err("synthetic tables need L"))?)?;
        let scale = match scale {
            "per-index" => SyntheticScale::PerIndex,
            "frozen" => SyntheticScale::Frozen,
            other => return Err(PyValueError::new_err(format!("unknown scale '{other}'"))),
        };
        sieve::synthetic_theta(&l, n, scale).map_err(py_err)
    } else {
        sieve::sieve_theta(kind, n).map_err(py_err)
    }
}

/// theta(1), ..., theta(n) for big-omega, small-omega, omega-squarefree or synthetic.
#[pyfunction]
#[pyo3(signature = (kind, n, l=None, scale="per-index"))]
fn sieve_theta(kind: &str, n: u64, l: Option<&str>, scale: &str) -> PyResult<Vec<u32>> {
    Ok(theta(kind, n, l, scale)?.iter().collect())
}

/// E^W_{n<=N} f(n).
#[pyfunction]
fn weighted_average(weight: &str, f: &str, n: u64) -> PyResult<Complex64> {
    let w = WeightTable::build(&parse::<WeightExpr>(weight)?, n).map_err(py_err)?;
    let f: TestFunction = parse(f)?;
    Ok(averages::weighted_average(&w, &f, n).map_err(py_err)?.value)
}

/// (E^bin or E^2bin of f at N, truncation bound).
#[pyfunction]
fn binomial_average(mode: &str, f: &str, n: u64) -> PyResult<(Complex64, f64)> {
    let mode: BinomialMode = parse(mode)?;
    let f: TestFunction = parse(f)?;
    let r = averages::binomial_average(mode, &f, n).map_err(py_err)?;
    Ok((r.value, r.truncation_bound))
}

/// Both sides of one part (cesaro, log, loglog) of the main equivalence.
#[pyfunction]
#[pyo3(signature = (part, kind, l, f, n, w="cesaro", scale="per-index"))]
#[allow(clippy::too_many_arguments)]
fn compare_main_theorem<'py>(
    py: Python<'py>,
    part: &str,
    kind: &str,
    l: &str,
    f: &str,
    n: u64,
    w: &str,
    scale: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let part: MainPart = parse(part)?;
    let table = theta(kind, n, Some(l), scale)?;
    let c = averages::compare_main_theorem(part, &table, &parse(l)?, &parse(w)?, &parse(f)?, n).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("tag", part.tag())?;
    d.set_item("N", c.n)?;
    d.set_item("L_of_N", c.l_of_n)?;
    d.set_item("lhs", c.lhs)?;
    d.set_item("rhs", c.rhs)?;
    d.set_item("diff", c.abs_diff)?;
    d.set_item("truncation_bound", c.truncation_bound)?;
    Ok(d)
}

#[pyfunction]
fn classify_hardy<'py>(py: Python<'py>, h: &str) -> PyResult<Bound<'py, PyDict>> {
    let h: HardyExpr = parse(h)?;
    let c = hardy::classify_hardy(&h).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("case", c.case_id)?;
    d.set_item("verdict_cesaro", c.verdict_cesaro.to_string())?;
    d.set_item("verdict_loglog", c.verdict_loglog.to_string())?;
    d.set_item("matched_polynomial", c.matched_polynomial.to_string())?;
    d.set_item("residual", c.residual.to_string())?;
    d.set_item("A", c.case4_constant)?;
    Ok(d)
}

/// (1 + 4 pi^2 A^2)^(-1/4), checked against quadrature.
#[pyfunction]
fn fresnel_constant(a: f64) -> PyResult<f64> {
    hardy::fresnel_constant(a).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (kind, l, n, scale="per-index"))]
fn variation_distance<'py>(py: Python<'py>, kind: &str, l: &str, n: u64, scale: &str) -> PyResult<Bound<'py, PyDict>> {
    let table = theta(kind, n, Some(l), scale)?;
    let g = gaussian::variation_distance(&table, &parse(l)?, n).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("L_of_N", g.l_of_n)?;
    d.set_item("variation_distance", g.variation_distance)?;
    d.set_item("window_mass", g.window_mass)?;
    d.set_item("window", g.window)?;
    Ok(d)
}

#[pyfunction]
fn binomial_vs_gaussian<'py>(py: Python<'py>, n: u64) -> PyResult<Bound<'py, PyDict>> {
    let r = gaussian::binomial_vs_gaussian(n).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("sup_ratio_dev", r.sup_ratio_dev)?;
    d.set_item("l1_window", r.l1_window)?;
    Ok(d)
}

/// Scheme average of e^{2 pi i k h(n)}; scheme is cesaro, bin, bin2 or a weight expression.
#[pyfunction]
#[pyo3(signature = (scheme, h, n, k=1))]
fn weyl_sum(scheme: &str, h: &str, n: u64, k: i64) -> PyResult<Complex64> {
    let h: HardyExpr = parse(h)?;
    let table;
    let scheme = match scheme {
        "cesaro" => WeylScheme::Cesaro,
        "bin" => WeylScheme::Bin,
        "bin2" => WeylScheme::Bin2,
        other => {
            table = WeightTable::build(&parse(other)?, n).map_err(py_err)?;
            WeylScheme::Weighted(&table)
        }
    };
    ud_lab::weyl_sum(scheme, ValueSource::Raw, &h, k, n).map_err(py_err)
}

/// Anchored star discrepancy; weights default to uniform.
#[pyfunction]
#[pyo3(signature = (points, weights=None))]
fn star_discrepancy(points: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<f64> {
    let sample = match weights {
        Some(w) => WeightedSample::from_values(&points, w),
        None => WeightedSample::uniform(&points),
    }
    .map_err(py_err)?;
    ud_lab::star_discrepancy(&sample).map_err(py_err)
}

/// [(N, modulus, predicted)] at each hit N <= n_max.
#[pyfunction]
#[pyo3(signature = (h, n_max, k=1))]
fn case4_probe(h: &str, n_max: u64, k: i64) -> PyResult<Vec<(u64, f64, f64)>> {
    let hits = ud_lab::case4_probe(&parse(h)?, k, n_max).map_err(py_err)?;
    Ok(hits.into_iter().map(|h| (h.n, h.modulus, h.predicted)).collect())
}

/// Statistic values at N = 1..=n_max.
#[pyfunction]
fn boos_regularity_check(n_max: u64) -> PyResult<Vec<f64>> {
    Ok(ud_lab::boos_regularity_check(n_max).map_err(py_err)?.values)
}

#[pymodule]
fn omega_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sieve_theta, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_average, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_average, m)?)?;
    m.add_function(wrap_pyfunction!(compare_main_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(classify_hardy, m)?)?;
    m.add_function(wrap_pyfunction!(fresnel_constant, m)?)?;
    m.add_function(wrap_pyfunction!(variation_distance, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_vs_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_sum, m)?)?;
    m.add_function(wrap_pyfunction!(star_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(case4_probe, m)?)?;
    m.add_function(wrap_pyfunction!(boos_regularity_check, m)?)?;
    Ok(())
}

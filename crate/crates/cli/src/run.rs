//! One function per command; each returns a [`Table`].

use std::path::Path;
use std::time::Instant;

use omega_lab_core::averages::{binomial_mean_with, compare_main_theorem, weighted_mean_with, BinomialMode, MainPart, TestFunction};
use omega_lab_core::cache::{cache_path, read_table, write_table};
use omega_lab_core::gaussian::{binomial_vs_gaussian, variation_distance};
use omega_lab_core::hardy::{classify_hardy, HardyExpr};
use omega_lab_core::sieve::{level_set_counts, sieve_theta, synthetic_theta, ThetaKind, ThetaTable};
use omega_lab_core::ud_lab::{
    boos_regularity_check, case4_probe, interval_weyl_scan, nonvanishing_probe, scheme_sample, star_discrepancy, weyl_sum,
    ProbeMode, ValueSource, WeylScheme,
};
use omega_lab_core::weights::{WeightExpr, WeightTable};
use omega_lab_core::{Complex64, Error, Result};
use rayon::prelude::*;
use serde_json::Value;

use crate::config::{Command, ExperimentConfig, Scheme, Source};
use crate::output::{complex, num, Table};

fn bad(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| bad(format!("this command needs {flag}")))
}

/// Runs the command inside a pool of `threads` workers (all cores if unset).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut table = pool.install(|| match cfg.command {
        Command::Sieve => sieve(cfg),
        Command::Avg => avg(cfg),
        Command::Compare => compare(cfg),
        Command::Gauss => gauss(cfg),
        Command::Classify => classify(cfg),
        Command::Ud => ud(cfg),
        Command::Probe => probe(cfg),
    })?;
    table.elapsed = Some(start.elapsed());
    Ok(table)
}

/// Largest cached limit for `kind` in `dir`.
pub fn largest_cached(dir: &Path, kind: ThetaKind) -> Option<u64> {
    cached_limits(dir, kind).into_iter().max()
}

fn cached_limits(dir: &Path, kind: ThetaKind) -> Vec<u64> {
    let prefix = format!("{}-", kind.name());
    let Ok(entries) = std::fs::read_dir(dir) else {
        return Vec::new();
    };
    entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix(&prefix)?.strip_suffix(".omga")?.parse().ok()
        })
        .collect()
}

/// A sieved table covering 1..=n: the smallest adequate cached one, or a
/// fresh sieve that is then cached. Synthetic tables are built on demand.
pub fn theta_table(cfg: &ExperimentConfig, n: u64) -> Result<ThetaTable> {
    if cfg.theta == ThetaKind::Synthetic {
        let l = need(&cfg.l, "--L for a synthetic table")?;
        return synthetic_theta(l, n, cfg.scale);
    }
    if let Some(limit) = cached_limits(&cfg.cache_dir, cfg.theta).into_iter().filter(|&m| m >= n).min() {
        let t = read_table(&cache_path(&cfg.cache_dir, cfg.theta, limit))?;
        if t.kind() != cfg.theta || t.limit() < n {
            return Err(Error::IncompatibleCache(format!("cached {} table does not cover {n}", cfg.theta)));
        }
        return Ok(t);
    }
    let t = sieve_theta(cfg.theta, n)?;
    std::fs::create_dir_all(&cfg.cache_dir)?;
    let path = cache_path(&cfg.cache_dir, cfg.theta, n);
    write_table(&t, &path)?;
    eprintln!("cached {} up to {n} at {}", cfg.theta, path.display());
    Ok(t)
}

fn grid(cfg: &ExperimentConfig) -> Result<&[u64]> {
    if cfg.grid.is_empty() {
        return Err(bad("this command needs --n or --grid"));
    }
    Ok(&cfg.grid)
}

fn sieve(cfg: &ExperimentConfig) -> Result<Table> {
    let g = grid(cfg)?;
    let t = theta_table(cfg, *g.last().unwrap())?;
    let mut table = Table::new(&["theta", "N", "level", "count"]);
    for &n in g {
        for (level, count) in level_set_counts(&t, n)? {
            table.push("eq_level_sets", "count", vec![cfg.theta.name().into(), n.into(), level.into(), count.into()]);
        }
    }
    Ok(table)
}

fn scheme_name(cfg: &ExperimentConfig) -> String {
    match cfg.scheme {
        Scheme::Cesaro => "cesaro".into(),
        Scheme::Weighted => format!("weighted[{}]", cfg.w.as_ref().map(|w| w.to_string()).unwrap_or_default()),
        Scheme::Bin => "bin".into(),
        Scheme::Bin2 => "bin2".into(),
    }
}

fn scheme_tag(s: Scheme) -> &'static str {
    match s {
        Scheme::Cesaro | Scheme::Weighted => "eq_weighted_average",
        Scheme::Bin => "eq_binomial_mean",
        Scheme::Bin2 => "eq_parity_neutral_mean",
    }
}

fn reach(scheme: Scheme, n: u64) -> u64 {
    if scheme == Scheme::Bin2 {
        2 * n
    } else {
        n
    }
}

/// Scheme average of g over n <= N; returns (value, truncation bound).
fn scheme_mean<G: Fn(u64) -> Complex64>(scheme: Scheme, w: Option<&WeightTable>, n: u64, g: G) -> Result<(Complex64, f64)> {
    match scheme {
        Scheme::Cesaro => Ok((omega_lab_core::averages::cesaro_mean_with(n, g)?, 0.0)),
        Scheme::Weighted => Ok((weighted_mean_with(w.expect("weight table"), n, g)?, 0.0)),
        Scheme::Bin => binomial_mean_with(BinomialMode::Bin, n, g),
        Scheme::Bin2 => binomial_mean_with(BinomialMode::Bin2, n, g),
    }
}

fn avg(cfg: &ExperimentConfig) -> Result<Table> {
    let f = need(&cfg.f, "--f")?;
    let source = cfg.source.unwrap_or(Source::Theta);
    let g: Vec<u64> = if cfg.grid.is_empty() && source == Source::Theta && cfg.theta != ThetaKind::Synthetic {
        let n = largest_cached(&cfg.cache_dir, cfg.theta)
            .ok_or_else(|| bad(format!("no --n given and no cached {} table in {}", cfg.theta, cfg.cache_dir.display())))?;
        vec![n / if cfg.scheme == Scheme::Bin2 { 2 } else { 1 }]
    } else {
        grid(cfg)?.to_vec()
    };
    let top = *g.last().unwrap();
    if top == 0 {
        return Err(bad("N must be positive"));
    }
    let weights = match cfg.scheme {
        Scheme::Weighted => Some(WeightTable::build(need(&cfg.w, "--w")?, top)?),
        _ => None,
    };
    let theta = match source {
        Source::Theta => Some(theta_table(cfg, reach(cfg.scheme, top))?),
        Source::Raw => None,
    };
    let memo = theta.as_ref().map(|t| f.tabulate(t.max_value() as u64));
    let rows = g
        .par_iter()
        .map(|&n| {
            let (value, bound) = match (&theta, &memo) {
                (Some(t), Some(m)) => scheme_mean(cfg.scheme, weights.as_ref(), n, |i| m[t.get(i) as usize])?,
                _ => scheme_mean(cfg.scheme, weights.as_ref(), n, |i| f.eval(i))?,
            };
            Ok((n, value, bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let src = match source {
        Source::Theta => cfg.theta.name(),
        Source::Raw => "raw",
    };
    let mut table = Table::new(&["source", "f", "N", "value_re", "value_im", "abs", "truncation_bound"]);
    let scheme = scheme_name(cfg);
    for (n, value, bound) in rows {
        let mut v = vec![src.into(), f.to_string().into(), n.into()];
        v.extend(complex(value));
        v.push(num(bound));
        table.push(scheme_tag(cfg.scheme), &scheme, v);
    }
    Ok(table)
}

fn compare(cfg: &ExperimentConfig) -> Result<Table> {
    let part = *need(&cfg.part, "--part")?;
    let l = need(&cfg.l, "--L")?;
    let f = need(&cfg.f, "--f")?;
    let g = grid(cfg)?;
    let w = match (&cfg.w, part) {
        (Some(w), _) => w.clone(),
        (None, MainPart::Log) => WeightExpr::Log,
        (None, _) => WeightExpr::Cesaro,
    };
    let theta = theta_table(cfg, *g.last().unwrap())?;
    let rows = g
        .par_iter()
        .map(|&n| compare_main_theorem(part, &theta, l, &w, f, n))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "theta", "L", "W", "f", "N", "L_of_N", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "diff", "truncation_bound", "l_in_scale_class",
    ]);
    let part_name = serde_json::to_value(part).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    for c in rows {
        table.push(
            part.tag(),
            &part_name,
            vec![
                cfg.theta.name().into(),
                l.to_string().into(),
                w.to_string().into(),
                f.to_string().into(),
                c.n.into(),
                c.l_of_n.into(),
                num(c.lhs.re),
                num(c.lhs.im),
                num(c.rhs.re),
                num(c.rhs.im),
                num(c.abs_diff),
                num(c.truncation_bound),
                c.l_in_scale_class.into(),
            ],
        );
    }
    Ok(table)
}

fn gauss(cfg: &ExperimentConfig) -> Result<Table> {
    let g = grid(cfg)?;
    match cfg.mode.as_deref().unwrap_or("theta") {
        "theta" => {
            let l = need(&cfg.l, "--L")?;
            let theta = theta_table(cfg, *g.last().unwrap())?;
            let rows = g.par_iter().map(|&n| variation_distance(&theta, l, n)).collect::<Result<Vec<_>>>()?;
            let mut table = Table::new(&[
                "theta", "L", "N", "L_of_N", "variation_distance", "window_mass", "window_lo", "window_hi", "gaussian_tail_bound",
            ]);
            for d in rows {
                table.push(
                    "eq_gaussian_condition",
                    "level-sets",
                    vec![
                        cfg.theta.name().into(),
                        l.to_string().into(),
                        d.n.into(),
                        num(d.l_of_n),
                        num(d.variation_distance),
                        num(d.window_mass),
                        num(d.window.0),
                        num(d.window.1),
                        num(d.gaussian_tail_bound),
                    ],
                );
            }
            Ok(table)
        }
        "binomial" => {
            let rows = g.par_iter().map(|&n| binomial_vs_gaussian(n)).collect::<Result<Vec<_>>>()?;
            let mut table = Table::new(&["N", "window_exponent", "sup_ratio_dev", "l1_window"]);
            for r in rows {
                table.push(
                    "eq_binomial_gaussian",
                    "bin2",
                    vec![r.n.into(), num(r.window_exponent), num(r.sup_ratio_dev), num(r.l1_window)],
                );
            }
            Ok(table)
        }
        other => Err(bad(format!("gauss mode must be theta or binomial, got '{other}'"))),
    }
}

fn classify(cfg: &ExperimentConfig) -> Result<Table> {
    let h = need(&cfg.h, "--h")?;
    let c = classify_hardy(h)?;
    let mut table = Table::new(&[
        "h", "case", "verdict_cesaro", "verdict_loglog", "matched_polynomial", "residual", "dominant_residual", "A",
    ]);
    table.push(
        "eq_growth_classification",
        "hardy",
        vec![
            h.to_string().into(),
            c.case_id.into(),
            c.verdict_cesaro.to_string().into(),
            c.verdict_loglog.to_string().into(),
            c.matched_polynomial.to_string().into(),
            c.residual.to_string().into(),
            c.dominant_residual.map(Value::from).unwrap_or(Value::Null),
            c.case4_constant.map(num).unwrap_or(Value::Null),
        ],
    );
    Ok(table)
}

fn weyl_scheme<'a>(cfg: &ExperimentConfig, w: Option<&'a WeightTable>) -> WeylScheme<'a> {
    match cfg.scheme {
        Scheme::Cesaro => WeylScheme::Cesaro,
        Scheme::Weighted => WeylScheme::Weighted(w.expect("weight table")),
        Scheme::Bin => WeylScheme::Bin,
        Scheme::Bin2 => WeylScheme::Bin2,
    }
}

fn ud(cfg: &ExperimentConfig) -> Result<Table> {
    let h = need(&cfg.h, "--h")?;
    let g = grid(cfg)?;
    let top = *g.last().unwrap();
    let mode = cfg.mode.as_deref().unwrap_or("weyl");
    if mode == "interval" {
        let s = need(&cfg.s, "--s")?;
        let rows = interval_weyl_scan(h, cfg.k, s, g)?;
        let mut table = Table::new(&["h", "k", "s", "N", "s_of_n", "abs", "envelope_1", "envelope_2", "hit_flag"]);
        for r in rows {
            table.push(
                "eq_short_interval_ud",
                "interval",
                vec![
                    h.to_string().into(),
                    cfg.k.into(),
                    s.to_string().into(),
                    r.n.into(),
                    r.s_of_n.into(),
                    num(r.modulus),
                    num(r.envelope_1),
                    num(r.envelope_2),
                    r.within_envelope.into(),
                ],
            );
        }
        return Ok(table);
    }
    let weights = match cfg.scheme {
        Scheme::Weighted => Some(WeightTable::build(need(&cfg.w, "--w")?, top)?),
        _ => None,
    };
    let scheme = weyl_scheme(cfg, weights.as_ref());
    let theta = match cfg.source.unwrap_or(Source::Raw) {
        Source::Theta => Some(theta_table(cfg, reach(cfg.scheme, top))?),
        Source::Raw => None,
    };
    let source = match &theta {
        Some(t) => ValueSource::Theta(t),
        None => ValueSource::Raw,
    };
    let src_name = if theta.is_some() { cfg.theta.name() } else { "raw" };
    let scheme_label = scheme_name(cfg);
    match mode {
        "weyl" => {
            let rows = g.par_iter().map(|&n| weyl_sum(scheme, source, h, cfg.k, n)).collect::<Result<Vec<_>>>()?;
            let mut table = Table::new(&["source", "h", "k", "N", "value_re", "value_im", "abs"]);
            for (&n, z) in g.iter().zip(rows) {
                let mut v = vec![src_name.into(), h.to_string().into(), cfg.k.into(), n.into()];
                v.extend(complex(z));
                table.push("eq_weyl_criterion", &scheme_label, v);
            }
            Ok(table)
        }
        "discrepancy" => {
            let rows = g
                .par_iter()
                .map(|&n| star_discrepancy(&scheme_sample(scheme, source, h, n)?))
                .collect::<Result<Vec<_>>>()?;
            let mut table = Table::new(&["source", "h", "N", "star_discrepancy"]);
            for (&n, d) in g.iter().zip(rows) {
                table.push("eq_star_discrepancy", &scheme_label, vec![src_name.into(), h.to_string().into(), n.into(), num(d)]);
            }
            Ok(table)
        }
        other => Err(bad(format!("ud mode must be weyl, interval or discrepancy, got '{other}'"))),
    }
}

fn probe(cfg: &ExperimentConfig) -> Result<Table> {
    let mode = cfg.mode.as_deref().ok_or_else(|| bad("probe needs --mode case1, case3, case4 or boos"))?;
    match mode {
        "case1" | "case3" => {
            let h = need(&cfg.h, "--h")?;
            let pm: ProbeMode = mode.parse()?;
            let g = grid(cfg)?;
            let reports = g
                .par_iter()
                .map(|&n| nonvanishing_probe(h, cfg.k, pm, &[n]))
                .collect::<Result<Vec<_>>>()?;
            let tag = if pm == ProbeMode::Case1 { "eq_case1_nonvanishing" } else { "eq_case3_nonvanishing" };
            let mut table = Table::new(&["h", "k", "grid_N", "N", "abs"]);
            for (&top, r) in g.iter().zip(reports) {
                for p in r.points {
                    table.push(tag, "bin2", vec![h.to_string().into(), cfg.k.into(), top.into(), p.n.into(), num(p.modulus)]);
                }
            }
            Ok(table)
        }
        "case4" => {
            let h = need(&cfg.h, "--h")?;
            let n_max = *grid(cfg)?.last().unwrap();
            let hits = case4_probe(h, cfg.k, n_max)?;
            let mut table = Table::new(&["h", "k", "N", "derivative_gap", "curvature", "abs", "predicted"]);
            for hit in hits {
                table.push(
                    "eq_case4_fresnel",
                    "bin2",
                    vec![
                        h.to_string().into(),
                        cfg.k.into(),
                        hit.n.into(),
                        num(hit.derivative_gap),
                        num(hit.curvature),
                        num(hit.modulus),
                        num(hit.predicted),
                    ],
                );
            }
            Ok(table)
        }
        "boos" => {
            let n_max = *grid(cfg)?.last().unwrap();
            let r = boos_regularity_check(n_max)?;
            let mut table = Table::new(&["N", "statistic", "running_sup"]);
            for (i, (v, s)) in r.values.iter().zip(&r.running_sup).enumerate() {
                table.push("eq_boos_regularity", "bin-vs-exp(sqrt(x))", vec![(i as u64 + 1).into(), num(*v), num(*s)]);
            }
            Ok(table)
        }
        other => Err(bad(format!("probe mode must be case1, case3, case4 or boos, got '{other}'"))),
    }
}

/// Process exit status for an error: 2 for bad input, 3 for resource trouble.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) | Error::Parse { .. } | Error::DegenerateWeight { .. } => 2,
        _ => 3,
    }
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<ThetaTable>();
    check::<WeightTable>();
    check::<TestFunction>();
    check::<HardyExpr>();
}

use approx::assert_relative_eq;
use omega_lab_core::averages::{binomial_mean_with, summation_by_parts_check, weighted_mean_with, BinomialMode};
use omega_lab_core::cache::{decode, encode};
use omega_lab_core::hardy::{parse_hardy, HardyExpr, Q};
use omega_lab_core::numeric::{BinomialWindow, NeumaierSum};
use omega_lab_core::sieve::{ThetaKind, ThetaTable};
use omega_lab_core::ud_lab::{star_discrepancy, WeightedSample};
use omega_lab_core::weights::{WeightExpr, WeightTable};
use omega_lab_core::Complex64;
use proptest::prelude::*;

fn hardy_term() -> impl Strategy<Value = HardyExpr> {
    (-20i128..20, 1i128..8, -4i128..12, 1i128..5).prop_map(|(c, d, p, q)| HardyExpr::power(Q::new(c, d), Q::new(p, q)))
}

fn hardy_sum() -> impl Strategy<Value = HardyExpr> {
    prop::collection::vec(hardy_term(), 1..4).prop_map(|ts| ts.iter().fold(HardyExpr::zero(), |acc, t| acc.add(t)))
}

proptest! {
    #[test]
    fn derivative_is_linear(a in hardy_sum(), b in hardy_sum(), x in 2.0f64..500.0) {
        let lhs = a.add(&b).differentiate(1).unwrap().eval(x);
        let rhs = a.differentiate(1).unwrap().eval(x) + b.differentiate(1).unwrap().eval(x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn eval_respects_products(a in hardy_sum(), b in hardy_sum(), x in 2.0f64..50.0) {
        let lhs = a.mul(&b).eval(x);
        let rhs = a.eval(x) * b.eval(x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn display_reparses(a in hardy_sum()) {
        let back = parse_hardy(&a.to_string()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn derivative_matches_difference_quotient(a in hardy_sum(), x in 10.0f64..1000.0) {
        let d = a.differentiate(1).unwrap().eval(x);
        let h = 1e-4 * x;
        let fd = (a.eval(x + h) - a.eval(x - h)) / (2.0 * h);
        let scale = 1.0 + a.eval(x).abs() / x + d.abs();
        prop_assert!((d - fd).abs() <= 1e-5 * scale, "{} vs {}", d, fd);
    }

    #[test]
    fn summation_by_parts_holds(x in prop::collection::vec(-10.0f64..10.0, 1..200), seed in 0u64..1000) {
        let y: Vec<f64> = (0..x.len()).map(|i| ((i as u64 * 7919 + seed) % 101) as f64 / 10.0 - 5.0).collect();
        let r = summation_by_parts_check(&x, &y, x.len()).unwrap();
        prop_assert!(r.abs_diff <= 1e-10 * (1.0 + r.lhs.abs()));
    }

    #[test]
    fn weighted_mean_of_constant_is_constant(n in 1u64..3000, re in -1.0f64..1.0) {
        for spec in [WeightExpr::Cesaro, WeightExpr::Log, WeightExpr::ExpSqrt] {
            let w = WeightTable::build(&spec, n).unwrap();
            let v = weighted_mean_with(&w, n, |_| Complex64::new(re, 0.0)).unwrap();
            prop_assert!((v.re - re).abs() <= 1e-12);
        }
    }

    #[test]
    fn weight_increments_telescope(n in 1u64..5000) {
        for spec in [WeightExpr::Cesaro, WeightExpr::Log, WeightExpr::LogLog { floor: true }] {
            let w = WeightTable::build(&spec, n).unwrap();
            let total: f64 = w.dw_values()[..n as usize].iter().copied().collect::<NeumaierSum>().value();
            prop_assert!((total - w.w(n)).abs() <= 1e-10 * w.w(n).max(1.0));
        }
    }

    #[test]
    fn binomial_window_is_symmetric_probability(n in 1u64..6000) {
        let w = BinomialWindow::new(n).unwrap();
        let mass: f64 = w.iter().map(|(_, p)| p).collect::<NeumaierSum>().value();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
        for (j, p) in w.iter() {
            prop_assert_eq!(p, w.weight(n - j));
        }
    }

    #[test]
    fn bin2_is_parity_neutral(n in 1u64..3000) {
        let (v, _) = binomial_mean_with(BinomialMode::Bin2, n, |i| Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).unwrap();
        prop_assert_eq!(v.re, 0.0);
    }

    #[test]
    fn star_discrepancy_bounds(pts in prop::collection::vec(0.0f64..1.0, 1..60)) {
        let s = WeightedSample::uniform(&pts).unwrap();
        let d = star_discrepancy(&s).unwrap();
        prop_assert!(d >= 1.0 / (2 * pts.len()) as f64 - 1e-12 && d <= 1.0);
        prop_assert!(s.weyl(1).norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn cache_encoding_roundtrips(values in prop::collection::vec(0u8..40, 1..500)) {
        let t = ThetaTable::from_u8(ThetaKind::BigOmega, values).unwrap();
        let back = decode(&encode(&t).unwrap()).unwrap();
        prop_assert_eq!(back.limit(), t.limit());
        prop_assert!(back.iter().eq(t.iter()));
    }
}

#[test]
fn power_rule_spot_check() {
    let h = parse_hardy("x^2.5 + 3*x*log(x)").unwrap();
    let d = h.differentiate(1).unwrap();
    let x = 7.0f64;
    assert_relative_eq!(d.eval(x), 2.5 * x.powf(1.5) + 3.0 * x.ln() + 3.0, max_relative = 1e-13);
}

mod common;

use common::{random_system, rng};
use mor_iha::iha::{run_iha, trefethen_diagnostics, IhaConfig, IhaResult};
use mor_iha::{FrequencyGrid, LtiSystem};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;

/// Value and slope agreement of `H_r(., dr) + d` with `H` at every core shift.
fn interpolation_gap(sys: &LtiSystem, res: &IhaResult, dr: f64) -> (f64, f64) {
    let mut member = res.family.assemble_statespace(dr);
    member.dr += res.feedthrough;
    let (mut dv, mut dd) = (0.0f64, 0.0f64);
    for &s in &res.family.core.shifts {
        let (h, dh) = sys.eval_deriv(s).unwrap();
        let (hr, dhr) = member.eval_deriv(s).unwrap();
        dv = dv.max((h - hr).norm() / h.norm().max(1e-300));
        dd = dd.max((dh - dhr).norm() / dh.norm().max(1e-300));
    }
    (dv, dd)
}

proptest! {
    #![proptest_config(common::config(20))]

    #[test]
    fn step2_keeps_interpolation_and_never_regresses(seed in any::<u64>(), n in 10usize..=40, ri in 0usize..3) {
        let r = [2, 4, 6][ri];
        let (sys, _) = random_system(seed, n);
        let res = run_iha(&sys, &IhaConfig::new(r)).unwrap();
        let mut g = rng(seed);
        let scale = res.surrogate_search.as_ref().map(|s| s.value_at_zero).unwrap_or(1.0).max(1e-6);
        let mut probes: Vec<f64> = (0..20).map(|_| g.random_range(-2.0..2.0) * scale).collect();
        probes.push(res.dr_star);
        for dr in probes {
            let (dv, dd) = interpolation_gap(&sys, &res, dr);
            prop_assert!(dv <= 1e-7 && dd <= 1e-5, "dr={}: value {:e} slope {:e}", dr, dv, dd);
        }
        if let Some(search) = &res.surrogate_search {
            prop_assert!(search.trace.iter().any(|p| p.dr == 0.0));
            prop_assert!(search.value <= search.value_at_zero);
            prop_assert!(search.trace.iter().all(|p| p.stable || p.value == f64::INFINITY));
        }
        prop_assert!(res.model.is_stable(0.0).unwrap());
        prop_assert!((res.model.dr - res.dr_star - res.feedthrough).abs() <= 1e-12 * (1.0 + res.model.dr.abs()));
    }

    #[test]
    fn sampled_min_below_certified_max(seed in any::<u64>(), n in 10usize..=30) {
        let (sys, _) = random_system(seed, n);
        let res = run_iha(&sys, &IhaConfig::new(2)).unwrap();
        let grid = FrequencyGrid::logspace(1e-3, 1e4, 2000).unwrap();
        let rep = trefethen_diagnostics(&sys, &res.model, &grid).unwrap();
        let certified = rep.certified_max.unwrap();
        prop_assert!(rep.sampled_min <= certified * (1.0 + 1e-8));
        prop_assert!(rep.sampled_max <= certified * (1.0 + 1e-6));
    }
}

#[test]
fn exact_mode_objective_matches_its_search() {
    let (sys, _) = random_system(11, 24);
    let res = run_iha(&sys, &IhaConfig::new(4).with_mode(mor_iha::iha::Step2Mode::Both)).unwrap();
    let exact = res.exact_search.as_ref().unwrap();
    assert!(exact.value <= exact.value_at_zero);
    let at_zero = res.family.eval_family(C64::new(0.0, 1.0), 0.0).unwrap();
    assert!(at_zero.norm().is_finite());
}

mod common;

use common::{random_system, rel_err};
use mor_iha::{run_irka, IrkaConfig};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn conjugate_closed(pts: &[C64]) -> bool {
    pts.iter().all(|p| pts.iter().any(|q| (q - p.conj()).norm() <= 1e-10 * (1.0 + p.norm())))
}

proptest! {
    #![proptest_config(common::config(30))]

    #[test]
    fn fixed_point_and_log_accounting(seed in any::<u64>(), n in 8usize..=40, r in 1usize..=6) {
        let (sys, _) = random_system(seed, n);
        let res = run_irka(&sys, &IrkaConfig::new(r)).unwrap();
        let q = res.log.iterations_used;
        prop_assert_eq!(res.trace.len(), q);
        prop_assert_eq!(res.log.harvested, q * r);
        for e in &res.log.entries {
            let (h, dh) = sys.eval_deriv(e.point).unwrap();
            prop_assert!((h - e.value).norm() <= 1e-12 * h.norm().max(1e-300) * 10.0 || h == e.value);
            prop_assert!((dh - e.derivative).norm() <= 1e-12 * dh.norm().max(1e-300) * 10.0 || dh == e.derivative);
        }
        for rec in &res.trace {
            prop_assert!(conjugate_closed(&rec.shifts));
        }
        if let Some(it) = res.fallback_iteration {
            prop_assert!(res.model.is_stable(0.0).unwrap());
            prop_assert_eq!(&res.model.shifts, &res.trace[it - 1].shifts);
        } else if res.converged {
            let last = &res.trace.last().unwrap().shifts;
            let mirrored: Vec<C64> = res.model.poles().unwrap().iter().map(|p| -p).collect();
            for s in last {
                let gap = mirrored.iter().map(|m| rel_err(*m, *s)).fold(f64::INFINITY, f64::min);
                prop_assert!(gap <= 1e-5, "shift {} has no mirrored pole (gap {})", s, gap);
            }
        }
    }
}

#[test]
fn model_is_real_with_zero_feedthrough() {
    for seed in 0..10 {
        let (sys, _) = random_system(seed, 30);
        let res = run_irka(&sys, &IrkaConfig::new(4)).unwrap();
        assert_eq!(res.model.dr, 0.0);
        assert!(res.model.is_real(1e-12));
        assert!(conjugate_closed(&res.model.shifts));
    }
}

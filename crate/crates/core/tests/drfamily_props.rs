mod common;

use common::{random_system, rhp_points, rng};
use mor_iha::{build_basis, project, realify, DrFamily, Scaling};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(common::config(30))]

    #[test]
    fn interpolation_is_invariant_in_dr(seed in any::<u64>(), n in 8usize..=40, r in 1usize..=6) {
        let (sys, _) = random_system(seed, n);
        let mut g = rng(seed ^ 0xd5);
        let pts = rhp_points(&mut g, r);
        let core = realify(&project(&sys, &build_basis(&sys, &pts, Scaling::UnitColumn).unwrap()).unwrap()).unwrap();
        let fam = DrFamily::new(core.clone());
        for &s in &pts {
            let gv = fam.g_values(s).unwrap();
            prop_assert!((gv.g1 - 1.0).norm() <= 1e-8 && (gv.g2 - 1.0).norm() <= 1e-8, "G at {}: {} {}", s, gv.g1, gv.g2);
        }
        for _ in 0..20 {
            let dr = g.random_range(-10.0..10.0);
            let member = fam.assemble_statespace(dr);
            for &s in &pts {
                let (h0, dh0) = core.eval_deriv(s).unwrap();
                let v = fam.eval_family(s, dr).unwrap();
                prop_assert!((v - h0).norm() <= 1e-8 * (1.0 + h0.norm()), "dr={} s={}: {} vs {}", dr, s, v, h0);
                let (vm, dvm) = member.eval_deriv(s).unwrap();
                prop_assert!((vm - h0).norm() <= 1e-8 * (1.0 + h0.norm()));
                prop_assert!((dvm - dh0).norm() <= 1e-6 * (1.0 + dh0.norm()));
                let step = 1e-6 * (1.0 + s.norm());
                let fd = (fam.eval_family(s + step, dr).unwrap() - fam.eval_family(s - step, dr).unwrap()) / (2.0 * step);
                prop_assert!((fd - dh0).norm() <= 1e-5 * (1.0 + dh0.norm()), "fd slope {} vs {}", fd, dh0);
            }
        }
    }

    #[test]
    fn statespace_member_matches_transfer_form(seed in any::<u64>(), n in 8usize..=30, r in 1usize..=6, dr in -5.0f64..5.0) {
        let (sys, _) = random_system(seed, n);
        let mut g = rng(seed ^ 0x77);
        let pts = rhp_points(&mut g, r);
        let fam = DrFamily::new(realify(&project(&sys, &build_basis(&sys, &pts, Scaling::UnitColumn).unwrap()).unwrap()).unwrap());
        let member = fam.assemble_statespace(dr);
        for _ in 0..10 {
            let s = num_complex::Complex64::new(g.random_range(0.0..5.0), g.random_range(-20.0..20.0));
            let a = member.eval(s).unwrap();
            let b = fam.eval_family(s, dr).unwrap();
            prop_assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()));
        }
    }
}

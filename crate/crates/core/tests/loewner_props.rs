mod common;

use common::{mirrored_points, random_modal, random_rational, rel_err, rhp_points, rng};
use mor_iha::loewner::check_rank_condition_full;
use mor_iha::{build_pencil, check_rank_condition, extract_surrogate, SurrogateOrder, TransferSample};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::Rng;

fn samples(modal: &common::Modal, pts: &[C64]) -> Vec<TransferSample> {
    pts.iter().map(|&s| modal.sample(s)).collect()
}

proptest! {
    #![proptest_config(common::config(40))]

    #[test]
    fn order_m_data_is_reproduced(seed in any::<u64>(), m in 2usize..=10) {
        let mut g = rng(seed);
        let modal = random_rational(&mut g, m);
        let pts = mirrored_points(&mut g, &modal);
        let pencil = build_pencil(&samples(&modal, &pts)).unwrap();
        // near-singular pivots put singular values in the gray zone of any
        // fixed rank threshold
        prop_assume!(pencil.singular_values[m - 1] > 1e-8 * pencil.singular_values[0]);
        let rank = check_rank_condition(&pencil, 1e-10).unwrap();
        prop_assert!(rank.satisfied, "{:?}", rank);
        let surr = extract_surrogate(&pencil, SurrogateOrder::Fixed(m)).unwrap();
        for _ in 0..50 {
            let s = C64::new(g.random_range(0.0..5.0), g.random_range(-100.0..100.0));
            let e = rel_err(surr.eval(s).unwrap(), modal.eval(s));
            prop_assert!(e <= 1e-7, "m={} s={} rel {:e}", m, s, e);
        }
    }

    #[test]
    fn conjugate_closed_data_gives_symmetric_surrogate(seed in any::<u64>(), m in 2usize..=6) {
        let mut g = rng(seed);
        let modal = random_rational(&mut g, m);
        let pts = mirrored_points(&mut g, &modal);
        let pencil = build_pencil(&samples(&modal, &pts)).unwrap();
        let surr = extract_surrogate(&pencil, SurrogateOrder::Fixed(m)).unwrap();
        for _ in 0..20 {
            let w = 10f64.powf(g.random_range(-2.0..2.0));
            let up = surr.eval(C64::new(0.0, w)).unwrap();
            let down = surr.eval(C64::new(0.0, -w)).unwrap();
            prop_assert!((up - down.conj()).norm() <= 1e-10 * up.norm().max(1e-300));
        }
    }
}

#[test]
fn rank_condition_holds_at_every_sample() {
    for seed in 0..20 {
        let mut g = rng(seed);
        let m = 2 + (seed as usize % 6);
        let modal = random_rational(&mut g, m);
        let pts = rhp_points(&mut g, m);
        let pencil = build_pencil(&samples(&modal, &pts)).unwrap();
        if pencil.singular_values[m - 1] <= 1e-8 * pencil.singular_values[0] {
            continue;
        }
        let check = check_rank_condition_full(&pencil, 1e-10).unwrap();
        assert!(check.satisfied, "seed {seed}: {check:?}");
        assert_eq!(check.rank, m);
    }
}

#[test]
fn auto_order_never_exceeds_sample_count() {
    for seed in 0..10 {
        let mut g = rng(seed);
        let modal = random_modal(&mut g, 12, true);
        let pts = rhp_points(&mut g, 6);
        let pencil = build_pencil(&samples(&modal, &pts)).unwrap();
        let surr = extract_surrogate(&pencil, SurrogateOrder::default()).unwrap();
        assert!(surr.k <= pencil.len());
        assert!(extract_surrogate(&pencil, SurrogateOrder::Fixed(7)).is_err());
    }
}

mod common;

use common::random_system;
use mor_iha::baselines::{balanced_truncation, modified_bt, MbtSettings};
use mor_iha::norms::{hinf_norm_realization, DenseRealization, DEFAULT_HINF_TOL};
use proptest::prelude::*;

proptest! {
    #![proptest_config(common::config(30))]

    #[test]
    fn bt_error_within_twice_tail_sum(seed in any::<u64>(), n in 2usize..=30) {
        let (sys, _) = random_system(seed, n);
        let full = DenseRealization::from_lti(&sys).unwrap();
        for r in 1..n {
            let bt = balanced_truncation(&sys, r).unwrap();
            prop_assert!(bt.model.is_stable(0.0).unwrap());
            let mut err = DenseRealization::difference(&full, &DenseRealization::from_reduced(&bt.model));
            err.d = num_complex::Complex64::new(0.0, 0.0);
            let e = hinf_norm_realization(&err, DEFAULT_HINF_TOL).unwrap().value;
            prop_assert!(e <= bt.error_bound * (1.0 + 1e-6) + 1e-10 * bt.sigmas.sigmas[0], "r={}: {} > {}", r, e, bt.error_bound);
        }
    }

    #[test]
    fn mbt_never_worse_than_bt(seed in any::<u64>(), n in 3usize..=20) {
        let (sys, _) = random_system(seed, n);
        let sys = sys.with_d(0.0);
        for r in [1, n / 2] {
            let m = modified_bt(&sys, r, MbtSettings::default()).unwrap();
            prop_assert!(m.hinf_error <= m.bt_error);
        }
    }
}

//! Balanced truncation and its constant feed-forward variant.

use faer::Mat;

use crate::error::{MorError, Result};
use crate::linalg;
use crate::norms::{
    gramian_factors, hinf_norm_realization, hinf_norm_sampled, Difference, DenseRealization, HankelSpectrum,
    DEFAULT_HINF_TOL,
};
use crate::optimize::{scan_and_refine, Probe};
use crate::projection::ReducedModel;
use crate::statespace::{FrequencyGrid, LtiSystem};

#[derive(Clone, Debug)]
pub struct BtResult {
    pub model: ReducedModel,
    pub sigmas: HankelSpectrum,
    /// `2 * sum_{i > r} sigma_i`.
    pub error_bound: f64,
}

/// Square-root balanced truncation to order `r` (`E_r = I`, `d_r = 0`).
/// Orders at or above `n` return the system itself.
pub fn balanced_truncation(sys: &LtiSystem, r: usize) -> Result<BtResult> {
    let n = sys.n();
    if r == 0 {
        return Err(MorError::InvalidInput("reduction order must be at least 1".into()));
    }
    let (lp, lq, a, b, c) = gramian_factors(sys)?;
    let cross = lq.transpose() * &lp;
    let (u, s, v) = linalg::svd_real(cross.as_ref())?;
    let sigmas = HankelSpectrum { sigmas: s.clone() };
    if r >= n {
        let model = ReducedModel::from_real(Mat::identity(n, n), a, b, c, 0.0);
        return Ok(BtResult { model, sigmas, error_bound: 0.0 });
    }
    let error_bound = sigmas.tail_bound(r);
    let top = s.first().copied().unwrap_or(0.0);
    // directions with vanishing Hankel singular values cannot be balanced
    let keep = s.iter().take(r).take_while(|&&x| x > 1e-14 * top).count();
    let scale: Vec<f64> = s[..keep].iter().map(|x| 1.0 / x.sqrt()).collect();
    let t = Mat::from_fn(n, keep, |i, j| {
        (0..v.nrows().min(lp.ncols())).map(|k| lp[(i, k)] * v[(k, j)]).sum::<f64>() * scale[j]
    });
    let w = Mat::from_fn(n, keep, |i, j| {
        (0..u.nrows().min(lq.ncols())).map(|k| lq[(i, k)] * u[(k, j)]).sum::<f64>() * scale[j]
    });
    let ar = w.transpose() * &a * &t;
    let br = linalg::real_mat_vec(w.transpose(), &b);
    let cr = linalg::real_mat_vec(t.transpose(), &c);
    let model = ReducedModel::from_real(Mat::identity(keep, keep), ar, br, cr, 0.0);
    Ok(BtResult { model, sigmas, error_bound })
}

/// Search settings for the MBT feed-forward shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MbtSettings {
    /// Candidates per sign in the initial linear scan.
    pub scan_points: usize,
    pub rel_tol: f64,
}

impl Default for MbtSettings {
    fn default() -> Self {
        Self { scan_points: 10, rel_tol: 1e-4 }
    }
}

#[derive(Clone, Debug)]
pub struct MbtResult {
    pub bt: BtResult,
    pub dr_star: f64,
    pub hinf_error: f64,
    /// Error at `dr = 0`, i.e. plain balanced truncation.
    pub bt_error: f64,
    pub trace: Vec<Probe>,
}

/// Balanced truncation plus the constant `dr` minimizing
/// `||H - (H_BT + dr)||_inf`, scanned over `+-2 ||H - H_BT||` then refined.
pub fn modified_bt(sys: &LtiSystem, r: usize, settings: MbtSettings) -> Result<MbtResult> {
    let bt = balanced_truncation(sys, r)?;
    let full = DenseRealization::from_lti(sys)?;
    let err0 = DenseRealization::difference(&full, &DenseRealization::from_reduced(&bt.model));
    let amplitude = hinf_norm_sampled(&Difference(sys, &bt.model), &FrequencyGrid::default_sampled())?.value;
    let objective = |dr: f64| {
        let mut e = err0.clone();
        e.d -= dr;
        hinf_norm_realization(&e, DEFAULT_HINF_TOL).map(|h| h.value).unwrap_or(f64::INFINITY)
    };
    let bt_error = objective(0.0);
    if amplitude == 0.0 || !bt_error.is_finite() {
        return Ok(MbtResult { bt, dr_star: 0.0, hinf_error: bt_error, bt_error, trace: vec![Probe { x: 0.0, value: bt_error }] });
    }
    let k = settings.scan_points.max(1);
    let mut candidates = vec![0.0];
    for i in 1..=k {
        let x = 2.0 * amplitude * i as f64 / k as f64;
        candidates.push(x);
        candidates.push(-x);
    }
    let best = scan_and_refine(objective, &candidates, settings.rel_tol, false).ok_or(MorError::NoStableDr)?;
    Ok(MbtResult { bt, dr_star: best.x, hinf_error: best.value, bt_error, trace: best.trace })
}

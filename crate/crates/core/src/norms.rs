//! H-infinity, H2 and Hankel norms.

use faer::Mat;
use rayon::prelude::*;

use crate::error::{MorError, Result};
use crate::linalg::{self, DenseLu, C64, ZERO};
use crate::loewner::Surrogate;
use crate::optimize::golden_section_min;
use crate::projection::ReducedModel;
use crate::statespace::{FrequencyGrid, LtiSystem, Spacing};

/// Anything that can be evaluated at a complex frequency.
pub trait TransferFn: Sync {
    fn eval_at(&self, s: C64) -> Result<C64>;
}

impl TransferFn for LtiSystem {
    fn eval_at(&self, s: C64) -> Result<C64> {
        self.eval(s)
    }
}

impl TransferFn for ReducedModel {
    fn eval_at(&self, s: C64) -> Result<C64> {
        self.eval(s)
    }
}

impl TransferFn for Surrogate {
    fn eval_at(&self, s: C64) -> Result<C64> {
        self.eval(s)
    }
}

/// `H(s) - H_r(s)` evaluated pointwise, without densifying `H`.
pub struct Difference<'a, A: TransferFn, B: TransferFn>(pub &'a A, pub &'a B);

impl<A: TransferFn, B: TransferFn> TransferFn for Difference<'_, A, B> {
    fn eval_at(&self, s: C64) -> Result<C64> {
        Ok(self.0.eval_at(s)? - self.1.eval_at(s)?)
    }
}

/// Dense, possibly complex realization `c^T (sE - A)^{-1} b + d`.
#[derive(Clone, Debug)]
pub struct DenseRealization {
    pub e: Mat<C64>,
    pub a: Mat<C64>,
    pub b: Vec<C64>,
    pub c: Vec<C64>,
    pub d: C64,
}

impl DenseRealization {
    pub fn from_lti(sys: &LtiSystem) -> Result<Self> {
        let (e, a) = sys.dense_pencil()?;
        Ok(Self {
            e: linalg::to_complex(e.as_ref()),
            a: linalg::to_complex(a.as_ref()),
            b: sys.b_complex(),
            c: sys.c_complex(),
            d: C64::new(sys.d(), 0.0),
        })
    }

    pub fn from_reduced(m: &ReducedModel) -> Self {
        Self { e: m.er.clone(), a: m.ar.clone(), b: m.br.clone(), c: m.cr.clone(), d: C64::new(m.dr, 0.0) }
    }

    pub fn from_surrogate(s: &Surrogate) -> Self {
        Self { e: s.ek.clone(), a: s.ak.clone(), b: s.bk.clone(), c: s.ck.clone(), d: ZERO }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Block-diagonal sum `sum_i sign_i * H_i(s)`.
    pub fn combine(parts: &[(&DenseRealization, f64)]) -> Self {
        let n: usize = parts.iter().map(|(p, _)| p.order()).sum();
        let mut e = Mat::<C64>::zeros(n, n);
        let mut a = Mat::<C64>::zeros(n, n);
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        let mut d = ZERO;
        let mut off = 0;
        for (p, sign) in parts {
            let k = p.order();
            for i in 0..k {
                for j in 0..k {
                    e[(off + i, off + j)] = p.e[(i, j)];
                    a[(off + i, off + j)] = p.a[(i, j)];
                }
            }
            b.extend_from_slice(&p.b);
            c.extend(p.c.iter().map(|v| v * *sign));
            d += p.d * *sign;
            off += k;
        }
        Self { e, a, b, c, d }
    }

    /// Error system `H_1 - H_2` of order `n_1 + n_2`.
    pub fn difference(x: &DenseRealization, y: &DenseRealization) -> Self {
        Self::combine(&[(x, 1.0), (y, -1.0)])
    }

    pub fn is_real(&self) -> bool {
        linalg::max_imag(self.e.as_ref()) == 0.0
            && linalg::max_imag(self.a.as_ref()) == 0.0
            && self.b.iter().chain(&self.c).all(|z| z.im == 0.0)
            && self.d.im == 0.0
    }

    /// `(E^{-1} A, E^{-1} b)`.
    pub fn standard_form(&self) -> Result<(Mat<C64>, Vec<C64>)> {
        if self.order() == 0 {
            return Ok((Mat::zeros(0, 0), Vec::new()));
        }
        let lu = DenseLu::new(self.e.as_ref()).ok_or(MorError::SingularE)?;
        Ok((lu.solve_mat(self.a.as_ref()), lu.solve_vec(&self.b)))
    }

    pub fn eval(&self, s: C64) -> Result<C64> {
        let n = self.order();
        if n == 0 {
            return Ok(self.d);
        }
        let k = Mat::from_fn(n, n, |i, j| s * self.e[(i, j)] - self.a[(i, j)]);
        let lu = DenseLu::new(k.as_ref()).ok_or(MorError::SingularShift(s))?;
        Ok(linalg::dot(&self.c, &lu.solve_vec(&self.b)) + self.d)
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        if self.is_real() {
            linalg::real_pencil_eigenvalues(
                linalg::real_part(self.a.as_ref()).as_ref(),
                linalg::real_part(self.e.as_ref()).as_ref(),
            )
        } else {
            linalg::complex_pencil_eigenvalues(self.a.as_ref(), self.e.as_ref())
        }
    }
}

impl TransferFn for DenseRealization {
    fn eval_at(&self, s: C64) -> Result<C64> {
        self.eval(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    LevelSet,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HinfResult {
    pub value: f64,
    pub peak_frequency: f64,
    pub method: NormMethod,
    pub iterations: usize,
}

/// Default relative accuracy of the level-set iteration.
pub const DEFAULT_HINF_TOL: f64 = 1e-8;

/// Gain evaluator on the standard form `c^T (jw - A)^{-1} b + d`.
struct StdForm {
    a: Mat<C64>,
    b: Vec<C64>,
    c: Vec<C64>,
    d: C64,
    real: bool,
}

impl StdForm {
    fn gain(&self, w: f64) -> f64 {
        let n = self.a.nrows();
        if n == 0 {
            return self.d.norm();
        }
        let s = C64::new(0.0, w);
        let k = Mat::from_fn(n, n, |i, j| if i == j { s - self.a[(i, j)] } else { -self.a[(i, j)] });
        match DenseLu::new(k.as_ref()) {
            Some(lu) => (linalg::dot(&self.c, &lu.solve_vec(&self.b)) + self.d).norm(),
            None => f64::INFINITY,
        }
    }

    /// Imaginary-axis eigenvalues `j w` of the Hamiltonian at level `gamma`.
    fn crossings(&self, gamma: f64) -> Result<Vec<f64>> {
        let n = self.a.nrows();
        let rinv = 1.0 / (gamma * gamma - self.d.norm_sqr());
        let (b, c, d) = (&self.b, &self.c, self.d);
        let dc = d.conj();
        let m = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => self.a[(i, j)] + b[i] * dc * c[j] * rinv,
            (true, false) => -b[i] * b[j - n].conj() * rinv,
            (false, true) => c[i - n].conj() * c[j] * (1.0 + d.norm_sqr() * rinv),
            (false, false) => {
                -self.a[(j - n, i - n)].conj() - c[i - n].conj() * d * b[j - n].conj() * rinv
            }
        });
        let eigs = if self.real {
            linalg::eigenvalues_real(linalg::real_part(m.as_ref()).as_ref())?
        } else {
            linalg::eigenvalues_complex(m.as_ref())?
        };
        let scale = linalg::max_abs(m.as_ref());
        let mut ws: Vec<f64> = eigs
            .iter()
            .filter(|z| z.re.abs() <= 1e-6 * z.norm() + 1e-12 * scale)
            .map(|z| z.im)
            .collect();
        ws.sort_by(f64::total_cmp);
        ws.dedup();
        Ok(ws)
    }
}

fn level_set(sf: &StdForm, poles: &[C64], rel_tol: f64) -> Result<HinfResult> {
    let n = sf.a.nrows();
    let both = |w: f64| if sf.real { vec![w.abs()] } else { vec![w, -w] };
    let mut candidates = vec![0.0];
    let mags: Vec<f64> = poles.iter().map(|p| p.norm()).filter(|&m| m > 0.0).collect();
    for p in poles {
        candidates.extend(both(p.im));
        candidates.extend(both(p.norm()));
    }
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().cloned().fold(0.0, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo * 1e-3, hi * 1e3) } else { (1e-3, 1e3) };
    for k in 0..64 {
        let w = lo * (hi / lo).powf(k as f64 / 63.0);
        candidates.extend(both(w));
    }
    let gains: Vec<(f64, f64)> = candidates.par_iter().map(|&w| (sf.gain(w), w)).collect();
    let (mut gamma_lb, mut peak) = gains
        .into_iter()
        .fold((sf.d.norm(), f64::INFINITY), |acc, g| if g.0 > acc.0 { g } else { acc });
    if !gamma_lb.is_finite() {
        return Ok(HinfResult { value: f64::INFINITY, peak_frequency: peak, method: NormMethod::LevelSet, iterations: 0 });
    }
    if gamma_lb == 0.0 || n == 0 {
        let peak = if peak.is_finite() { peak } else { 0.0 };
        return Ok(HinfResult { value: gamma_lb, peak_frequency: peak, method: NormMethod::LevelSet, iterations: 0 });
    }
    let mut iterations = 0;
    for _ in 0..60 {
        iterations += 1;
        let gamma = (1.0 + 2.0 * rel_tol) * gamma_lb;
        let ws = sf.crossings(gamma)?;
        if ws.is_empty() {
            break;
        }
        let mut mids: Vec<f64> = ws.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        mids.extend_from_slice(&ws);
        if sf.real {
            for m in mids.iter_mut() {
                *m = m.abs();
            }
        }
        let best = mids
            .par_iter()
            .map(|&w| (sf.gain(w), w))
            .collect::<Vec<_>>()
            .into_iter()
            .fold((f64::NEG_INFINITY, 0.0), |acc, g| if g.0 > acc.0 { g } else { acc });
        if best.0 > gamma_lb {
            gamma_lb = best.0;
            peak = best.1;
            if !gamma_lb.is_finite() {
                break;
            }
        } else {
            break;
        }
    }
    Ok(HinfResult { value: gamma_lb, peak_frequency: peak, method: NormMethod::LevelSet, iterations })
}

fn std_form(real: &DenseRealization) -> Result<(StdForm, Vec<C64>)> {
    let (a, b) = real.standard_form()?;
    let is_real = real.is_real();
    let poles = if a.nrows() == 0 {
        Vec::new()
    } else if is_real {
        linalg::eigenvalues_real(linalg::real_part(a.as_ref()).as_ref())?
    } else {
        linalg::eigenvalues_complex(a.as_ref())?
    };
    Ok((StdForm { a, b, c: real.c.clone(), d: real.d, real: is_real }, poles))
}

/// Level-set H-infinity norm of a stable dense realization.
pub fn hinf_norm_realization(real: &DenseRealization, rel_tol: f64) -> Result<HinfResult> {
    let (sf, poles) = std_form(real)?;
    let worst = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    if worst >= 0.0 {
        return Err(MorError::UnstableSystem(worst));
    }
    level_set(&sf, &poles, rel_tol)
}

/// Peak gain on the imaginary axis without a stability requirement;
/// infinite if a pole lies on the axis.
pub fn linf_norm_realization(real: &DenseRealization, rel_tol: f64) -> Result<HinfResult> {
    let (sf, poles) = std_form(real)?;
    if let Some(p) = poles.iter().find(|p| p.re.abs() <= 1e-12 * p.norm().max(1.0)) {
        return Ok(HinfResult { value: f64::INFINITY, peak_frequency: p.im, method: NormMethod::LevelSet, iterations: 0 });
    }
    level_set(&sf, &poles, rel_tol)
}

/// Level-set H-infinity norm; requires `n` within the dense cap.
pub fn hinf_norm(sys: &LtiSystem, rel_tol: f64) -> Result<HinfResult> {
    hinf_norm_realization(&DenseRealization::from_lti(sys)?, rel_tol)
}

/// Peak of `|H(jw)|` over the grid plus one golden-section refinement
/// (30 steps) around the best grid point. A lower bound, not certified.
pub fn hinf_norm_sampled<F: TransferFn>(f: &F, grid: &FrequencyGrid) -> Result<HinfResult> {
    let pts = grid.points();
    let gains: Vec<f64> = pts
        .par_iter()
        .map(|&w| f.eval_at(C64::new(0.0, w)).map(|h| h.norm()))
        .collect::<Result<_>>()?;
    let (imax, &gmax) = gains
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, g| if *g.1 > *acc.1 { g } else { acc });
    let mut out = HinfResult { value: gmax, peak_frequency: pts[imax], method: NormMethod::Sampled, iterations: 0 };
    if pts.len() < 2 {
        return Ok(out);
    }
    let lo = pts[imax.saturating_sub(1)];
    let hi = pts[(imax + 1).min(pts.len() - 1)];
    let logscale = grid.spacing() == Spacing::Logarithmic && lo > 0.0;
    let to_w = |x: f64| if logscale { x.exp() } else { x };
    let (a, b) = if logscale { (lo.ln(), hi.ln()) } else { (lo, hi) };
    let neg_gain = |x: f64| match f.eval_at(C64::new(0.0, to_w(x))) {
        Ok(h) => -h.norm(),
        Err(_) => f64::INFINITY,
    };
    let (x, v) = golden_section_min(neg_gain, a, b, 0.0, 0.0, 30);
    out.iterations = 30;
    if -v > out.value {
        out.value = -v;
        out.peak_frequency = to_w(x);
    }
    Ok(out)
}

/// H2 norm from the controllability Gramian of the standard form.
pub fn h2_norm(sys: &LtiSystem) -> Result<f64> {
    if sys.d() != 0.0 {
        return Err(MorError::NonProper(sys.d()));
    }
    let (a, b, c, _) = sys.standard_form()?;
    check_stable_real(&a)?;
    let bb = Mat::from_fn(b.len(), b.len(), |i, j| b[i] * b[j]);
    let p = linalg::lyapunov(a.as_ref(), bb.as_ref())?;
    let pc = linalg::real_mat_vec(p.as_ref(), &c);
    let v: f64 = c.iter().zip(&pc).map(|(x, y)| x * y).sum();
    Ok(v.max(0.0).sqrt())
}

fn check_stable_real(a: &Mat<f64>) -> Result<()> {
    let eigs = linalg::eigenvalues_real(a.as_ref())?;
    let worst = eigs.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    if worst >= 0.0 {
        return Err(MorError::UnstableSystem(worst));
    }
    Ok(())
}

/// Hankel singular values, descending.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelSpectrum {
    pub sigmas: Vec<f64>,
}

impl HankelSpectrum {
    /// `sigma_{i+1}` in one-based terms; zero past the end.
    pub fn sigma_after(&self, r: usize) -> f64 {
        self.sigmas.get(r).copied().unwrap_or(0.0)
    }

    /// `2 * sum_{i > r} sigma_i`.
    pub fn tail_bound(&self, r: usize) -> f64 {
        2.0 * self.sigmas.iter().skip(r).sum::<f64>()
    }
}

/// Gramian square-root factors `(L_p, L_q)` with `P = L_p L_p^T`,
/// `Q = L_q L_q^T` for the standard form `(E^{-1}A, E^{-1}b, c)`.
pub(crate) fn gramian_factors(sys: &LtiSystem) -> Result<(Mat<f64>, Mat<f64>, Mat<f64>, Vec<f64>, Vec<f64>)> {
    let (a, b, c, _) = sys.standard_form()?;
    check_stable_real(&a)?;
    let n = a.nrows();
    let bb = Mat::from_fn(n, n, |i, j| b[i] * b[j]);
    let cc = Mat::from_fn(n, n, |i, j| c[i] * c[j]);
    let p = linalg::lyapunov(a.as_ref(), bb.as_ref())?;
    let at = a.transpose().to_owned();
    let q = linalg::lyapunov(at.as_ref(), cc.as_ref())?;
    let lp = linalg::psd_factor(p.as_ref())?;
    let lq = linalg::psd_factor(q.as_ref())?;
    Ok((lp, lq, a, b, c))
}

pub fn hankel_singular_values(sys: &LtiSystem) -> Result<HankelSpectrum> {
    if sys.n() == 0 {
        return Ok(HankelSpectrum { sigmas: Vec::new() });
    }
    let (lp, lq, ..) = gramian_factors(sys)?;
    let prod = lq.transpose() * &lp;
    let mut sigmas = linalg::singular_values_real(prod.as_ref())?;
    sigmas.sort_by(|a, b| b.total_cmp(a));
    Ok(HankelSpectrum { sigmas })
}

/// Relative H-infinity error and the Hankel lower bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorAndBound {
    pub abs_error: f64,
    pub rel_error: f64,
    pub full_norm: f64,
    /// `sigma_{r+1} / ||H||`, available only when certified.
    pub lower_bound: Option<f64>,
    pub method: NormMethod,
}

/// `||H - H_r|| / ||H||` with `sigma_{r+1} / ||H||`. Certified level-set
/// norms are used when `n + r` fits the dense cap, sampled norms otherwise.
pub fn relative_error_and_bound(sys: &LtiSystem, reduced: &ReducedModel, r: usize) -> Result<ErrorAndBound> {
    if sys.n() + reduced.order() <= sys.dense_cap() {
        let full = DenseRealization::from_lti(sys)?;
        let err = DenseRealization::difference(&full, &DenseRealization::from_reduced(reduced));
        let full_norm = hinf_norm_realization(&full, DEFAULT_HINF_TOL)?.value;
        let abs_error = match hinf_norm_realization(&err, DEFAULT_HINF_TOL) {
            Ok(h) => h.value,
            Err(MorError::UnstableSystem(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let sigma = hankel_singular_values(sys)?.sigma_after(r);
        Ok(ErrorAndBound {
            abs_error,
            rel_error: abs_error / full_norm,
            full_norm,
            lower_bound: Some(sigma / full_norm),
            method: NormMethod::LevelSet,
        })
    } else {
        let grid = FrequencyGrid::default_sampled();
        let full_norm = hinf_norm_sampled(sys, &grid)?.value;
        let abs_error = hinf_norm_sampled(&Difference(sys, reduced), &grid)?.value;
        Ok(ErrorAndBound {
            abs_error,
            rel_error: abs_error / full_norm,
            full_norm,
            lower_bound: None,
            method: NormMethod::Sampled,
        })
    }
}

/// `omega,magnitude,phase` rows.
pub fn frequency_response_csv<F: TransferFn>(f: &F, grid: &FrequencyGrid) -> Result<String> {
    let vals: Vec<C64> = grid.points().par_iter().map(|&w| f.eval_at(C64::new(0.0, w))).collect::<Result<_>>()?;
    let mut out = String::from("omega,magnitude,phase\n");
    for (w, h) in grid.points().iter().zip(vals) {
        out.push_str(&format!("{:.6e},{:.6e},{:.6e}\n", w, h.norm(), h.arg()));
    }
    Ok(out)
}

/// `omega,re,im` rows of `H(jw) - H_r(jw)`.
pub fn error_curve_csv<A: TransferFn, B: TransferFn>(full: &A, reduced: &B, grid: &FrequencyGrid) -> Result<String> {
    let diff = Difference(full, reduced);
    let vals: Vec<C64> = grid.points().par_iter().map(|&w| diff.eval_at(C64::new(0.0, w))).collect::<Result<_>>()?;
    let mut out = String::from("omega,re,im\n");
    for (w, h) in grid.points().iter().zip(vals) {
        out.push_str(&format!("{:.6e},{:.6e},{:.6e}\n", w, h.re, h.im));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order(a: f64) -> LtiSystem {
        LtiSystem::standard(Mat::from_fn(1, 1, |_, _| -a), vec![1.0], vec![1.0], 0.0).unwrap()
    }

    fn resonator() -> LtiSystem {
        LtiSystem::standard(
            Mat::from_fn(2, 2, |i, j| [[0.0, 1.0], [-1.0, -0.2]][i][j]),
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn first_order_hinf() {
        let h = hinf_norm(&first_order(1.0), 1e-10).unwrap();
        assert!((h.value - 1.0).abs() < 1e-10);
        assert!(h.peak_frequency.abs() < 1e-6);
    }

    #[test]
    fn resonator_peak() {
        // |H(jw)|^2 = 1 / ((1 - w^2)^2 + 0.04 w^2), maximal at w^2 = 0.98
        let wpk = 0.98f64.sqrt();
        let peak = 1.0 / ((1.0 - wpk * wpk).powi(2) + 0.04 * wpk * wpk).sqrt();
        let h = hinf_norm(&resonator(), 1e-10).unwrap();
        assert!((h.value - peak).abs() < 1e-8 * peak, "{} vs {peak}", h.value);
        assert!((h.value - 5.0252).abs() < 1e-4);
        assert!((h.peak_frequency - wpk).abs() < 1e-3);
    }

    #[test]
    fn static_gain() {
        let r = DenseRealization { e: Mat::zeros(0, 0), a: Mat::zeros(0, 0), b: vec![], c: vec![], d: C64::new(0.7, 0.0) };
        assert!((hinf_norm_realization(&r, 1e-8).unwrap().value - 0.7).abs() < 1e-15);
    }

    #[test]
    fn feedthrough_dominated_highpass() {
        // s / (s + 1) = 1 - 1/(s+1): supremum 1 approached as w -> infinity
        let sys = LtiSystem::standard(Mat::from_fn(1, 1, |_, _| -1.0), vec![1.0], vec![-1.0], 1.0).unwrap();
        let h = hinf_norm(&sys, 1e-10).unwrap();
        assert!((h.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unstable_rejected_but_linf_defined() {
        let sys = LtiSystem::standard(Mat::from_fn(1, 1, |_, _| 2.0), vec![1.0], vec![1.0], 0.0).unwrap();
        assert!(matches!(hinf_norm(&sys, 1e-8), Err(MorError::UnstableSystem(_))));
        let l = linf_norm_realization(&DenseRealization::from_lti(&sys).unwrap(), 1e-10).unwrap();
        assert!((l.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn sampled_norms() {
        let g = FrequencyGrid::default_sampled();
        let h = hinf_norm_sampled(&first_order(1.0), &g).unwrap();
        assert!((h.value - 1.0).abs() < 1e-8);
        let res = resonator();
        let exact = hinf_norm(&res, 1e-10).unwrap().value;
        let s = hinf_norm_sampled(&res, &FrequencyGrid::logspace(1e-2, 1e2, 500).unwrap()).unwrap();
        assert!((s.value - exact).abs() <= 1e-3 * exact);
        let off = hinf_norm_sampled(&res, &FrequencyGrid::logspace(10.0, 100.0, 500).unwrap()).unwrap();
        assert!(off.value < exact);
    }

    #[test]
    fn h2_closed_forms() {
        for a in [0.5, 1.0, 4.0] {
            let v = h2_norm(&first_order(a)).unwrap();
            assert!((v - (1.0 / (2.0 * a)).sqrt()).abs() < 1e-10);
        }
        let proper = LtiSystem::standard(Mat::from_fn(1, 1, |_, _| -1.0), vec![1.0], vec![1.0], 0.1).unwrap();
        assert!(matches!(h2_norm(&proper), Err(MorError::NonProper(_))));
    }

    #[test]
    fn hankel_scalar_and_unreachable_mode() {
        let s = hankel_singular_values(&first_order(1.0)).unwrap();
        assert!((s.sigmas[0] - 0.5).abs() < 1e-10);
        let sys = LtiSystem::standard(
            Mat::from_fn(2, 2, |i, j| if i == j { -1.0 - i as f64 } else { 0.0 }),
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            0.0,
        )
        .unwrap();
        let s = hankel_singular_values(&sys).unwrap();
        assert!((s.sigmas[0] - 0.5).abs() < 1e-10);
        assert!(s.sigmas[1].abs() < 1e-10);
    }

    #[test]
    fn error_and_bound_edge_cases() {
        let sys = resonator();
        let exact = crate::projection::ReducedModel::from_real(
            Mat::identity(2, 2),
            Mat::from_fn(2, 2, |i, j| [[0.0, 1.0], [-1.0, -0.2]][i][j]),
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            0.0,
        );
        let e = relative_error_and_bound(&sys, &exact, 2).unwrap();
        assert!(e.rel_error <= 1e-10);
        assert_eq!(e.lower_bound, Some(0.0));
        let zero = relative_error_and_bound(&sys, &ReducedModel::constant(0.0), 0).unwrap();
        assert!((zero.rel_error - 1.0).abs() < 1e-10);
        assert!(zero.lower_bound.unwrap() <= 1.0);
    }

    #[test]
    fn descriptor_matches_standard() {
        let e = Mat::from_fn(2, 2, |i, j| [[2.0, 0.5], [0.0, 1.0]][i][j]);
        let a = Mat::from_fn(2, 2, |i, j| [[-1.0, 0.3], [0.2, -3.0]][i][j]);
        let sys = LtiSystem::dense(Some(e), a, vec![1.0, 2.0], vec![0.5, -1.0], 0.0).unwrap();
        let lvl = hinf_norm(&sys, 1e-10).unwrap().value;
        let g = FrequencyGrid::logspace(1e-4, 1e4, 20000).unwrap();
        let swp = hinf_norm_sampled(&sys, &g).unwrap().value;
        assert!((lvl - swp).abs() <= 1e-6 * lvl && swp <= lvl * (1.0 + 2e-10) + 1e-15);
    }
}

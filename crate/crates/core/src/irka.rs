//! Iterative rational Krylov fixed point for H2-optimal interpolation points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MorError, Result};
use crate::linalg::{self, C64};
use crate::projection::{build_basis_with_samples, project, realify, InterpolationBasis, ReducedModel, Scaling};
use crate::statespace::{LtiSystem, TransferSample};

/// How the first shift set is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum InitPolicy {
    Given(Vec<C64>),
    /// Real shifts log-spaced between spectral magnitude estimates of (A, E).
    LogSpaced,
    /// Real shifts drawn log-uniformly between the same estimates.
    Random { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrkaConfig {
    pub r: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub init: InitPolicy,
    pub stagnation_window: usize,
    pub scaling: Scaling,
}

impl IrkaConfig {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            tol: 1e-6,
            max_iters: 100,
            init: InitPolicy::LogSpaced,
            stagnation_window: 10,
            scaling: Scaling::UnitColumn,
        }
    }

    pub fn with_init(mut self, init: InitPolicy) -> Self {
        self.init = init;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Every Hermite sample `(s, H(s), H'(s))` computed during the iteration.
#[derive(Clone, Debug, Default)]
pub struct SampleLog {
    /// Samples with exact-duplicate points removed, in harvest order.
    pub entries: Vec<TransferSample>,
    /// Number of samples harvested before deduplication (`q * r`).
    pub harvested: usize,
    pub iterations_used: usize,
}

impl SampleLog {
    fn extend(&mut self, samples: &[TransferSample]) {
        self.harvested += samples.len();
        for s in samples {
            if !self.entries.iter().any(|e| e.point == s.point) {
                self.entries.push(*s);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub shifts: Vec<C64>,
    pub shift_change: f64,
}

#[derive(Clone, Debug)]
pub struct IrkaResult {
    pub model: ReducedModel,
    pub basis: InterpolationBasis,
    pub log: SampleLog,
    pub converged: bool,
    pub final_shift_change: f64,
    pub trace: Vec<IterationRecord>,
    /// Some intermediate model had right-half-plane poles that were mirrored.
    pub reflected: bool,
    /// The shift change stopped improving before `tol` was reached.
    pub stagnated: bool,
    /// A shift hit a pole and was nudged by a relative 1e-8.
    pub perturbed: bool,
    /// The last iterate was unstable, so `model` is the latest stable one
    /// from this iteration.
    pub fallback_iteration: Option<usize>,
}

/// `max_i min_j |new_i - old_j| / |old_j|`.
pub fn shift_change(new: &[C64], old: &[C64]) -> f64 {
    new.iter()
        .map(|a| {
            old.iter()
                .map(|b| (a - b).norm() / b.norm().max(f64::MIN_POSITIVE))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Mirrors reduced poles into the open right half-plane.
fn mirror(poles: &[C64]) -> (Vec<C64>, bool) {
    let reflected = poles.iter().any(|p| p.re > 0.0);
    let mut shifts: Vec<C64> = poles.iter().map(|p| C64::new(p.re.abs(), p.im)).collect();
    shifts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    (shifts, reflected)
}

/// Largest Ritz value magnitude of `op` from a short Arnoldi run.
fn arnoldi_radius(n: usize, start: &[C64], op: impl Fn(&[C64]) -> Result<Vec<C64>>) -> Result<f64> {
    let steps = n.min(30);
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(steps + 1);
    let n0 = norm(start);
    q.push(start.iter().map(|z| z / n0).collect());
    let mut h = faer::Mat::<f64>::zeros(steps + 1, steps);
    let mut m = steps;
    for j in 0..steps {
        let mut w = op(&q[j])?;
        for (i, qi) in q.iter().enumerate() {
            let hij: C64 = qi.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
            h[(i, j)] = hij.re;
            for (wk, qk) in w.iter_mut().zip(qi) {
                *wk -= qk * hij;
            }
        }
        let hn = norm(&w);
        h[(j + 1, j)] = hn;
        if hn <= 1e-12 * n0.max(1.0) {
            m = j + 1;
            break;
        }
        q.push(w.iter().map(|z| z / hn).collect());
    }
    let hm = faer::Mat::from_fn(m, m, |i, j| h[(i, j)]);
    let eigs = linalg::eigenvalues_real(hm.as_ref())?;
    Ok(eigs.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Magnitude bounds `(min |lambda|, max |lambda|)` for the poles of `sys`.
pub fn spectrum_bounds(sys: &LtiSystem) -> Result<(f64, f64)> {
    let n = sys.n();
    let mut start: Vec<C64> = sys.b_complex();
    for (k, z) in start.iter_mut().enumerate() {
        *z += C64::new(1.0 + 0.1 * (k % 7) as f64, 0.0);
    }
    let e_lu = sys.factor_e()?;
    let a_lu = sys.factor_shift(C64::new(0.0, 0.0))?;
    let hi = arnoldi_radius(n, &start, |x| e_lu.solve(&sys.a_mul(x)))?;
    // (0 E - A)^{-1} E = -A^{-1} E; the sign does not affect magnitudes
    let inv = arnoldi_radius(n, &start, |x| a_lu.solve(&sys.e_mul(x)))?;
    let lo = if inv > 0.0 { 1.0 / inv } else { hi };
    Ok((lo.min(hi), hi.max(lo)))
}

fn initial_shifts(sys: &LtiSystem, cfg: &IrkaConfig) -> Result<Vec<C64>> {
    let r = cfg.r;
    match &cfg.init {
        InitPolicy::Given(s) => {
            if s.len() != r {
                return Err(MorError::InvalidInput(format!("{} initial shifts given for r = {r}", s.len())));
            }
            if s.iter().any(|z| z.re <= 0.0) {
                return Err(MorError::InvalidInput("initial shifts must lie in the open right half-plane".into()));
            }
            Ok(s.clone())
        }
        InitPolicy::LogSpaced => {
            let (lo, hi) = spectrum_bounds(sys)?;
            let (lo, hi) = widen(lo, hi);
            if r == 1 {
                return Ok(vec![C64::new((lo * hi).sqrt(), 0.0)]);
            }
            let (l, h) = (lo.log10(), hi.log10());
            Ok((0..r)
                .map(|k| C64::new(10f64.powf(l + (h - l) * k as f64 / (r - 1) as f64), 0.0))
                .collect())
        }
        InitPolicy::Random { seed } => {
            let (lo, hi) = spectrum_bounds(sys)?;
            let (lo, hi) = widen(lo, hi);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut s: Vec<f64> = (0..r)
                .map(|_| 10f64.powf(rng.random_range(lo.log10()..hi.log10())))
                .collect();
            s.sort_by(f64::total_cmp);
            Ok(s.into_iter().map(|x| C64::new(x, 0.0)).collect())
        }
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    let lo = if lo > 0.0 && lo.is_finite() { lo } else { 1e-3 };
    let hi = if hi.is_finite() && hi > lo * (1.0 + 1e-6) { hi } else { lo * 10.0 };
    (lo, hi)
}

fn build_with_retry(
    sys: &LtiSystem,
    shifts: &mut [C64],
    scaling: Scaling,
    perturbed: &mut bool,
) -> Result<(InterpolationBasis, Vec<TransferSample>)> {
    match build_basis_with_samples(sys, shifts, scaling) {
        Err(MorError::SingularShift(bad)) => {
            *perturbed = true;
            for s in shifts.iter_mut() {
                if (*s - bad).norm() <= 1e-12 * (1.0 + bad.norm()) || (*s - bad.conj()).norm() <= 1e-12 * (1.0 + bad.norm()) {
                    *s *= 1.0 + 1e-8;
                }
            }
            build_basis_with_samples(sys, shifts, scaling)
        }
        other => other,
    }
}

/// Runs the fixed point `s <- mirror(poles(H_r))` from the configured start.
pub fn run_irka(sys: &LtiSystem, cfg: &IrkaConfig) -> Result<IrkaResult> {
    let n = sys.n();
    if cfg.r == 0 || cfg.r > n {
        return Err(MorError::InvalidInput(format!("reduction order {} outside 1..={n}", cfg.r)));
    }
    if !(cfg.tol > 0.0) || cfg.max_iters == 0 {
        return Err(MorError::InvalidInput("tol must be positive and max_iters nonzero".into()));
    }
    let mut shifts = initial_shifts(sys, cfg)?;
    let mut log = SampleLog::default();
    let mut trace = Vec::new();
    let mut reflected = false;
    let mut perturbed = false;
    let mut best_change = f64::INFINITY;
    let mut since_best = 0usize;
    let mut stagnated = false;
    let mut converged = false;
    let mut change = f64::INFINITY;
    let mut last: Option<(ReducedModel, InterpolationBasis)> = None;
    let mut last_stable: Option<(ReducedModel, InterpolationBasis, usize)> = None;

    for it in 1..=cfg.max_iters {
        let (basis, samples) = build_with_retry(sys, &mut shifts, cfg.scaling, &mut perturbed)?;
        log.extend(&samples);
        log.iterations_used = it;
        let model = realify(&project(sys, &basis)?)?;
        let poles = model.poles()?;
        let (next, refl) = mirror(&poles);
        reflected |= refl;
        if poles.iter().all(|p| p.re < 0.0) {
            last_stable = Some((model.clone(), basis.clone(), it));
        }
        change = shift_change(&next, &shifts);
        trace.push(IterationRecord { iteration: it, shifts: shifts.clone(), shift_change: change });
        last = Some((model, basis));
        if change < cfg.tol {
            converged = true;
            break;
        }
        if change < best_change {
            best_change = change;
            since_best = 0;
        } else {
            since_best += 1;
            if cfg.stagnation_window > 0 && since_best >= cfg.stagnation_window {
                stagnated = true;
                break;
            }
        }
        shifts = next;
    }
    let (mut model, mut basis) = last.expect("at least one iteration runs");
    let mut fallback_iteration = None;
    if !model.is_stable(0.0)? {
        if let Some((m, b, it)) = last_stable {
            model = m;
            basis = b;
            fallback_iteration = Some(it);
        }
    }
    Ok(IrkaResult {
        model,
        basis,
        log,
        converged,
        final_shift_change: change,
        trace,
        reflected,
        stagnated,
        perturbed,
        fallback_iteration,
    })
}

/// Residuals of the first-order H2 conditions at the mirrored reduced poles.
#[derive(Clone, Debug)]
pub struct H2ConditionReport {
    pub points: Vec<C64>,
    pub value_residuals: Vec<f64>,
    pub derivative_residuals: Vec<f64>,
    pub passed: bool,
}

impl H2ConditionReport {
    pub fn max_residual(&self) -> f64 {
        self.value_residuals
            .iter()
            .chain(&self.derivative_residuals)
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Relative residuals `|H - H_r| / (1 + |H|)` and the same for derivatives
/// at `-lambda_i` for every reduced pole `lambda_i`.
pub fn check_h2_conditions(sys: &LtiSystem, model: &ReducedModel, tol: f64) -> Result<H2ConditionReport> {
    let poles = model.poles()?;
    let mut gap = f64::INFINITY;
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            gap = gap.min((poles[i] - poles[j]).norm());
        }
    }
    if gap <= 1e-10 {
        return Err(MorError::RepeatedPoles(gap));
    }
    let points: Vec<C64> = poles.iter().map(|p| -p).collect();
    let mut value_residuals = Vec::with_capacity(points.len());
    let mut derivative_residuals = Vec::with_capacity(points.len());
    for &s in &points {
        let (h, dh) = sys.eval_deriv(s)?;
        let (hr, dhr) = model.eval_deriv(s)?;
        value_residuals.push((h - hr).norm() / (1.0 + h.norm()));
        derivative_residuals.push((dh - dhr).norm() / (1.0 + dh.norm()));
    }
    let passed = value_residuals.iter().chain(&derivative_residuals).all(|&x| x <= tol);
    Ok(H2ConditionReport { points, value_residuals, derivative_residuals, passed })
}

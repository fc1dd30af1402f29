//! Interpolatory H-infinity approximation: IRKA core, feed-forward tuning
//! over a Loewner surrogate of the error, and the final assembly.

use std::f64::consts::PI;

use crate::drfamily::DrFamily;
use crate::error::{MorError, Result};
use crate::irka::{run_irka, IrkaConfig, IrkaResult};
use crate::linalg::C64;
use crate::loewner::{build_pencil, extract_surrogate, merge_within, resolve_order, Surrogate, SurrogateOrder};
use crate::norms::{
    hinf_norm_realization, hinf_norm_sampled, linf_norm_realization, DenseRealization, Difference, NormMethod,
    TransferFn, DEFAULT_HINF_TOL,
};
use crate::optimize::scan_and_refine;
use crate::projection::ReducedModel;
use crate::statespace::{FrequencyGrid, LtiSystem, TransferSample};

/// Which error model drives the `dr` search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Step2Mode {
    #[default]
    Surrogate,
    Exact,
    Both,
}

/// Candidate grid for the `dr` scan: `0` and `+-scale * fractions`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketPolicy {
    pub fractions: Vec<f64>,
    /// Extend by factors of ten while the best candidate is on the edge.
    pub expand: bool,
    pub rel_tol: f64,
}

impl Default for BracketPolicy {
    fn default() -> Self {
        Self { fractions: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0], expand: true, rel_tol: 1e-4 }
    }
}

impl BracketPolicy {
    fn candidates(&self, scale: f64) -> Vec<f64> {
        let mut out = vec![0.0];
        for f in &self.fractions {
            out.push(scale * f);
            out.push(-scale * f);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IhaConfig {
    pub irka: IrkaConfig,
    pub step2_mode: Step2Mode,
    pub bracket: BracketPolicy,
    pub stability_margin: f64,
    pub surrogate_order: SurrogateOrder,
    /// Log samples closer than this (relative) to an earlier one are dropped
    /// before the Loewner construction.
    pub merge_tol: f64,
    /// Raise automatic surrogate orders to at least `2r + 1` for
    /// state-space-symmetric input.
    pub sss_floor: bool,
}

/// Relative singular-value cutoff for the surrogate order in the `d_r` search.
pub const IHA_AUTO_TOL: f64 = 1e-8;

impl IhaConfig {
    pub fn new(r: usize) -> Self {
        Self {
            irka: IrkaConfig::new(r),
            step2_mode: Step2Mode::Surrogate,
            bracket: BracketPolicy::default(),
            stability_margin: 0.0,
            surrogate_order: SurrogateOrder::Auto { tol: IHA_AUTO_TOL, cap: None },
            merge_tol: 1e-4,
            sss_floor: true,
        }
    }

    pub fn with_mode(mut self, mode: Step2Mode) -> Self {
        self.step2_mode = mode;
        self
    }
}

/// One objective evaluation during the `dr` search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrProbe {
    pub dr: f64,
    pub value: f64,
    pub stable: bool,
}

#[derive(Clone, Debug)]
pub struct DrSearch {
    pub dr_star: f64,
    pub value: f64,
    pub value_at_zero: f64,
    pub trace: Vec<DrProbe>,
    /// Every probe was rejected; `dr_star` fell back to zero.
    pub no_stable_dr: bool,
    pub method: NormMethod,
}

impl DrSearch {
    pub fn rejected(&self) -> usize {
        self.trace.iter().filter(|p| !p.stable).count()
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("dr,value,stable\n");
        for p in &self.trace {
            out.push_str(&format!("{:.6e},{:.6e},{}\n", p.dr, p.value, p.stable));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct IhaResult {
    /// `H_r(s, dr*)` including any full-order feed-forward term.
    pub model: ReducedModel,
    pub dr_star: f64,
    pub objective_value: f64,
    pub irka: IrkaResult,
    pub family: DrFamily,
    pub surrogate: Option<Surrogate>,
    /// Singular values of the Loewner pivot pencil, descending.
    pub loewner_singular_values: Vec<f64>,
    /// Number of error samples fed to the Loewner construction.
    pub log_size: usize,
    pub surrogate_search: Option<DrSearch>,
    pub exact_search: Option<DrSearch>,
    /// Step 2 was skipped because the sampled error vanished.
    pub step2_skipped: bool,
    /// Full-order feed-forward term stripped before and restored after.
    pub feedthrough: f64,
}

impl IhaResult {
    pub fn rejected_dr_count(&self) -> usize {
        self.surrogate_search.iter().chain(&self.exact_search).map(DrSearch::rejected).sum()
    }

    pub fn surrogate_order(&self) -> usize {
        self.surrogate.as_ref().map(|s| s.k).unwrap_or(0)
    }
}

/// Rejects `dr` values whose family member has a pole within the margin.
fn stable_at(fam: &DrFamily, dr: f64, margin: f64) -> bool {
    fam.stability_of(dr, margin).map(|c| c.stable).unwrap_or(false)
}

/// Minimizes `objective(dr)` with stability rejection.
pub fn optimize_dr(
    fam: &DrFamily,
    objective: impl Fn(f64) -> f64 + Sync,
    scale: f64,
    margin: f64,
    policy: &BracketPolicy,
    method: NormMethod,
) -> DrSearch {
    let guarded = |dr: f64| if stable_at(fam, dr, margin) { objective(dr) } else { f64::INFINITY };
    let value_at_zero = guarded(0.0);
    if !(scale > 0.0) || !scale.is_finite() {
        return DrSearch {
            dr_star: 0.0,
            value: value_at_zero,
            value_at_zero,
            trace: vec![DrProbe { dr: 0.0, value: value_at_zero, stable: value_at_zero.is_finite() }],
            no_stable_dr: !value_at_zero.is_finite(),
            method,
        };
    }
    let found = scan_and_refine(guarded, &policy.candidates(scale), policy.rel_tol, policy.expand);
    match found {
        Some(best) => {
            let trace = best
                .trace
                .iter()
                .map(|p| DrProbe { dr: p.x, value: p.value, stable: stable_at(fam, p.x, margin) })
                .collect();
            DrSearch { dr_star: best.x, value: best.value, value_at_zero, trace, no_stable_dr: false, method }
        }
        None => DrSearch {
            dr_star: 0.0,
            value: value_at_zero,
            value_at_zero,
            trace: policy
                .candidates(scale)
                .into_iter()
                .map(|dr| DrProbe { dr, value: f64::INFINITY, stable: false })
                .collect(),
            no_stable_dr: true,
            method,
        },
    }
}

/// Surrogate-mode objective: `|| F_k - (H_r(., dr) - H_r^0) ||_inf` as one
/// state-space residual of order `k + 2r`.
pub fn surrogate_objective(fam: &DrFamily, surr: &Surrogate, dr: f64) -> f64 {
    let fk = DenseRealization::from_surrogate(surr);
    let core = DenseRealization::from_reduced(&fam.core);
    let member = DenseRealization::from_reduced(&fam.assemble_statespace(dr));
    let resid = DenseRealization::combine(&[(&fk, 1.0), (&core, 1.0), (&member, -1.0)]);
    linf_norm_realization(&resid, DEFAULT_HINF_TOL).map(|h| h.value).unwrap_or(f64::INFINITY)
}

/// Exact-mode objective `||H - H_r(., dr)||_inf`, certified when `n + r`
/// fits the dense cap and sampled on the default grid otherwise.
pub fn exact_objective(sys: &LtiSystem, full: Option<&DenseRealization>, fam: &DrFamily, dr: f64) -> f64 {
    let member = fam.assemble_statespace(dr);
    match full {
        Some(full) => {
            let err = DenseRealization::difference(full, &DenseRealization::from_reduced(&member));
            hinf_norm_realization(&err, DEFAULT_HINF_TOL).map(|h| h.value).unwrap_or(f64::INFINITY)
        }
        None => hinf_norm_sampled(&Difference(sys, &member), &FrequencyGrid::default_sampled())
            .map(|h| h.value)
            .unwrap_or(f64::INFINITY),
    }
}

fn error_samples(log: &[TransferSample], core: &ReducedModel, merge_tol: f64) -> Result<Vec<TransferSample>> {
    merge_within(log, merge_tol)
        .into_iter()
        .map(|s| {
            let (h0, dh0) = core.eval_deriv(s.point)?;
            Ok(TransferSample { point: s.point, value: s.value - h0, derivative: s.derivative - dh0 })
        })
        .collect()
}

/// Runs IRKA, tunes `dr` and assembles `H_r(s, dr*)`.
pub fn run_iha(sys: &LtiSystem, cfg: &IhaConfig) -> Result<IhaResult> {
    if !(cfg.stability_margin >= 0.0) {
        return Err(MorError::InvalidInput("stability margin must be nonnegative".into()));
    }
    if !(cfg.merge_tol >= 0.0 && cfg.merge_tol < 1.0) {
        return Err(MorError::InvalidInput(format!("merge tolerance {} outside [0, 1)", cfg.merge_tol)));
    }
    let feedthrough = sys.d();
    let stripped;
    let sys = if feedthrough != 0.0 {
        stripped = sys.with_d(0.0);
        &stripped
    } else {
        sys
    };
    let r = cfg.irka.r;
    let irka = run_irka(sys, &cfg.irka)?;
    let family = DrFamily::new(irka.model.clone());
    let samples = error_samples(&irka.log.entries, &family.core, cfg.merge_tol)?;
    let log_size = samples.len();
    let h_scale = irka.log.entries.iter().map(|s| s.value.norm()).fold(0.0, f64::max);
    let f_scale = samples.iter().map(|s| s.value.norm().max(s.derivative.norm())).fold(0.0, f64::max);
    let degenerate = f_scale <= 1e-12 * h_scale.max(f64::MIN_POSITIVE) || samples.len() < 2;

    let mut surrogate = None;
    let mut loewner_singular_values = Vec::new();
    let mut surrogate_search = None;
    let mut exact_search = None;
    if !degenerate {
        if cfg.step2_mode != Step2Mode::Exact {
            let pencil = build_pencil(&samples)?;
            loewner_singular_values = pencil.singular_values.clone();
            let mut order = cfg.surrogate_order;
            if cfg.sss_floor && sys.is_state_space_symmetric(1e-12) {
                if let SurrogateOrder::Auto { cap, .. } = order {
                    let floor = (2 * r + 1).min(samples.len());
                    let k = resolve_order(&pencil, order).max(floor);
                    order = SurrogateOrder::Fixed(cap.map_or(k, |c| c.min(k)));
                }
            }
            let surr = extract_with_fallback(&pencil, order)?;
            let scale = linf_norm_realization(&DenseRealization::from_surrogate(&surr), DEFAULT_HINF_TOL)
                .map(|h| h.value)
                .unwrap_or(0.0);
            let search = optimize_dr(
                &family,
                |dr| surrogate_objective(&family, &surr, dr),
                if scale.is_finite() { scale } else { f_scale },
                cfg.stability_margin,
                &cfg.bracket,
                NormMethod::LevelSet,
            );
            surrogate = Some(surr);
            surrogate_search = Some(search);
        }
        if cfg.step2_mode != Step2Mode::Surrogate {
            let full = if sys.n() + r <= sys.dense_cap() { Some(DenseRealization::from_lti(sys)?) } else { None };
            let method = if full.is_some() { NormMethod::LevelSet } else { NormMethod::Sampled };
            let scale = exact_objective(sys, full.as_ref(), &family, 0.0);
            exact_search = Some(optimize_dr(
                &family,
                |dr| exact_objective(sys, full.as_ref(), &family, dr),
                scale,
                cfg.stability_margin,
                &cfg.bracket,
                method,
            ));
        }
    }
    let chosen = match cfg.step2_mode {
        Step2Mode::Exact => exact_search.as_ref(),
        _ => surrogate_search.as_ref(),
    };
    let (dr_star, objective_value) = match chosen {
        Some(s) => (s.dr_star, s.value),
        None => (0.0, 0.0),
    };
    let mut model = family.assemble_statespace(dr_star);
    model.dr += feedthrough;
    Ok(IhaResult {
        model,
        dr_star,
        objective_value,
        irka,
        family,
        surrogate,
        loewner_singular_values,
        log_size,
        surrogate_search,
        exact_search,
        step2_skipped: degenerate,
        feedthrough,
    })
}

fn extract_with_fallback(pencil: &crate::loewner::LoewnerPencil, order: SurrogateOrder) -> Result<Surrogate> {
    match extract_surrogate(pencil, order) {
        Err(MorError::SingularEk) => {
            for k in (0..resolve_order(pencil, order)).rev() {
                if let Ok(s) = extract_surrogate(pencil, SurrogateOrder::Fixed(k)) {
                    return Ok(s);
                }
            }
            Err(MorError::SingularEk)
        }
        other => other,
    }
}

/// Equioscillation and interpolation-count diagnostics of `H - H_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrefethenReport {
    /// `min |error| / max |error|` on the grid; 1.0 for a vanishing error.
    pub circularity: f64,
    pub degenerate: bool,
    /// Zeros of `H - H_r` in the open right half-plane, with multiplicity.
    pub rhp_interpolation_count: Option<usize>,
    /// The count agreed on two contour radii.
    pub contour_converged: bool,
    pub sampled_min: f64,
    pub sampled_max: f64,
    pub certified_max: Option<f64>,
}

/// Winding number of `f` around the boundary of the right half disc of
/// radius `radius`, or `None` when the contour passes through a zero or
/// the phase cannot be resolved.
pub fn rhp_winding<F: TransferFn>(f: &F, radius: f64) -> Option<i64> {
    let path = |t: f64| -> C64 {
        if t < 1.0 {
            C64::new(0.0, radius * 10f64.powf(-12.0 * t))
        } else if t < 2.0 {
            C64::new(0.0, radius * 1e-12 * (1.0 - 2.0 * (t - 1.0)))
        } else if t < 3.0 {
            C64::new(0.0, -radius * 10f64.powf(-12.0 * (3.0 - t)))
        } else {
            let theta = -PI / 2.0 + PI * (t - 3.0);
            C64::from_polar(radius, theta)
        }
    };
    let value = |t: f64| -> Option<C64> {
        let v = f.eval_at(path(t)).ok()?;
        if v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite() {
            None
        } else {
            Some(v)
        }
    };
    let wrap = |d: f64| {
        let mut d = d % (2.0 * PI);
        if d > PI {
            d -= 2.0 * PI
        } else if d < -PI {
            d += 2.0 * PI
        }
        d
    };
    let knots = 800;
    let mut total = 0.0;
    let mut prev_t = 0.0;
    let mut prev = value(0.0)?;
    for k in 1..=knots {
        let t = 4.0 * k as f64 / knots as f64;
        let cur = if k == knots { value(0.0)? } else { value(t)? };
        let mut stack = vec![(prev_t, prev, t, cur, 0u32)];
        while let Some((t0, v0, t1, v1, depth)) = stack.pop() {
            let d = wrap(v1.arg() - v0.arg());
            if d.abs() <= PI / 6.0 {
                total += d;
                continue;
            }
            if depth >= 40 {
                return None;
            }
            let tm = 0.5 * (t0 + t1);
            let vm = value(tm)?;
            stack.push((tm, vm, t1, v1, depth + 1));
            stack.push((t0, v0, tm, vm, depth + 1));
        }
        prev_t = t;
        prev = cur;
    }
    let winding = total / (2.0 * PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.1 {
        return None;
    }
    Some(rounded as i64)
}

/// Circularity of the error curve, RHP interpolation count, and the
/// sampled/certified error magnitudes.
pub fn trefethen_diagnostics(sys: &LtiSystem, model: &ReducedModel, grid: &FrequencyGrid) -> Result<TrefethenReport> {
    let diff = Difference(sys, model);
    let mags: Vec<f64> = grid
        .points()
        .iter()
        .map(|&w| diff.eval_at(C64::new(0.0, w)).map(|v| v.norm()))
        .collect::<Result<_>>()?;
    let sampled_min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let sampled_max = mags.iter().cloned().fold(0.0, f64::max);
    let degenerate = sampled_max == 0.0;
    let circularity = if degenerate { 1.0 } else { sampled_min / sampled_max };

    let mut radius = model.shifts.iter().map(|s| s.norm()).fold(0.0, f64::max);
    if let Ok(p) = model.poles() {
        radius = p.iter().map(|z| z.norm()).fold(radius, f64::max);
    }
    if sys.n() <= sys.dense_cap().min(2000) {
        if let Ok(p) = sys.poles() {
            radius = p.iter().map(|z| z.norm()).fold(radius, f64::max);
        }
    }
    let radius = 100.0 * radius.max(1.0);
    let (count, converged) = if degenerate {
        (None, false)
    } else {
        match (rhp_winding(&diff, radius), rhp_winding(&diff, 10.0 * radius)) {
            (Some(a), Some(b)) if a == b && a >= 0 => (Some(a as usize), true),
            (Some(a), _) if a >= 0 => (Some(a as usize), false),
            _ => (None, false),
        }
    };
    let certified_max = if sys.n() + model.order() <= sys.dense_cap() {
        let err = DenseRealization::difference(&DenseRealization::from_lti(sys)?, &DenseRealization::from_reduced(model));
        hinf_norm_realization(&err, DEFAULT_HINF_TOL).ok().map(|h| h.value)
    } else {
        None
    };
    Ok(TrefethenReport {
        circularity,
        degenerate,
        rhp_interpolation_count: count,
        contour_converged: converged,
        sampled_min,
        sampled_max,
        certified_max,
    })
}

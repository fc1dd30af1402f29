//! Derivative-free scalar minimization used for feed-forward tuning and
//! sampled-norm refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimizer of `f` on `[lo, hi]`.
///
/// Stops after `max_iters` steps or once the bracket is narrower than
/// `rel_tol * max(|x|, abs_floor)`. Infinite values are allowed and treated
/// as worse than every finite value.
pub fn golden_section_min(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_floor: f64,
    max_iters: usize,
) -> (f64, f64) {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iters {
        let mid = 0.5 * (a + b);
        if (b - a) <= rel_tol * mid.abs().max(abs_floor) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Index of the smallest value; ties within `tie_tol` (relative) go to the
/// candidate with smaller `|x|`. Returns `None` if every value is infinite.
pub fn best_index(points: &[(f64, f64)], tie_tol: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(x, v)) in points.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(j) => {
                let (bx, bv) = points[j];
                let tie = (v - bv).abs() <= tie_tol * v.abs().max(bv.abs()).max(f64::MIN_POSITIVE);
                if (tie && x.abs() < bx.abs()) || (!tie && v < bv) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// One evaluated candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub x: f64,
    pub value: f64,
}

/// Result of [`scan_and_refine`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub value: f64,
    /// Every probe in evaluation order, scan first then refinement.
    pub trace: Vec<Probe>,
}

/// Evaluates `f` on the candidates (in parallel), then refines the best one
/// by golden section between its neighbours. With `expand_edges`, a best
/// value at the outermost positive or negative candidate adds a candidate
/// ten times further out, up to eight times. Returns `None` when every
/// probe is infinite. The refined point replaces the scan winner only if it
/// is strictly better, so a candidate at zero is never beaten by a tie.
pub fn scan_and_refine(
    f: impl Fn(f64) -> f64 + Sync,
    candidates: &[f64],
    rel_tol: f64,
    expand_edges: bool,
) -> Option<ScalarMin> {
    use rayon::prelude::*;
    let mut xs: Vec<f64> = candidates.to_vec();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut trace: Vec<Probe> = xs.par_iter().map(|&x| Probe { x, value: f(x) }).collect();
    let scale = xs.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let pick = |trace: &[Probe]| {
        let pts: Vec<(f64, f64)> = trace.iter().map(|p| (p.x, p.value)).collect();
        best_index(&pts, 1e-12).map(|i| trace[i])
    };
    if expand_edges {
        for _ in 0..8 {
            let Some(best) = pick(&trace) else { break };
            let hi = trace.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let lo = trace.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let next = if best.x == hi && hi > 0.0 {
                10.0 * hi
            } else if best.x == lo && lo < 0.0 {
                10.0 * lo
            } else {
                break;
            };
            trace.push(Probe { x: next, value: f(next) });
        }
    }
    let best = pick(&trace)?;
    let mut sorted: Vec<f64> = trace.iter().map(|p| p.x).collect();
    sorted.sort_by(f64::total_cmp);
    let pos = sorted.iter().position(|&x| x == best.x).unwrap_or(0);
    let lo = sorted[pos.saturating_sub(1)];
    let hi = sorted[(pos + 1).min(sorted.len() - 1)];
    let mut out = ScalarMin { x: best.x, value: best.value, trace };
    if hi > lo {
        let mut refine = Vec::new();
        let floor = (scale * 1e-12).max(f64::MIN_POSITIVE);
        let (x, v) = golden_section_min(
            |x| {
                let v = f(x);
                refine.push(Probe { x, value: v });
                v
            },
            lo,
            hi,
            rel_tol,
            floor,
            200,
        );
        out.trace.extend(refine);
        if v < out.value {
            out.x = x;
            out.value = v;
        }
    }
    Some(out)
}

//! Loewner-pencil realization of sampled transfer data.

use faer::Mat;

use crate::error::{MorError, Result};
use crate::linalg::{self, DenseLu, C64, ZERO};
use crate::projection::ReducedModel;
use crate::statespace::{FrequencyGrid, LtiSystem, TransferSample};

/// Default relative singular-value cutoff for automatic order selection.
pub const DEFAULT_AUTO_TOL: f64 = 1e-5;

fn within(a: C64, b: C64, rel_tol: f64) -> bool {
    (a - b).norm() <= rel_tol * a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

fn too_close(a: C64, b: C64) -> bool {
    within(a, b, 1e-12)
}

/// Drops every sample whose point nearly coincides with an earlier one.
pub fn merge_near_duplicates(samples: &[TransferSample]) -> Vec<TransferSample> {
    merge_within(samples, 1e-12)
}

/// Drops every sample within relative distance `rel_tol` of an earlier one.
pub fn merge_within(samples: &[TransferSample], rel_tol: f64) -> Vec<TransferSample> {
    let mut kept: Vec<TransferSample> = Vec::with_capacity(samples.len());
    for s in samples {
        if !kept.iter().any(|k| within(k.point, s.point, rel_tol.max(1e-12))) {
            kept.push(*s);
        }
    }
    kept
}

/// Loewner matrix `L`, shifted Loewner matrix `M` and data vector `Z`.
#[derive(Clone, Debug)]
pub struct LoewnerPencil {
    pub points: Vec<C64>,
    pub l: Mat<C64>,
    pub m: Mat<C64>,
    pub z: Vec<C64>,
    /// Singular values of `s_p L - M` at the pivot, descending.
    pub singular_values: Vec<f64>,
    pub pivot_index: usize,
}

fn probe_indices(points: &[C64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].norm().total_cmp(&points[b].norm()).then(a.cmp(&b)));
    let mut probes = vec![order[0], order[order.len() / 2], order[order.len() - 1]];
    probes.dedup();
    probes.sort_unstable();
    probes.dedup();
    probes
}

fn shifted(p: &LoewnerPencil, i: usize) -> Mat<C64> {
    let s = p.points[i];
    Mat::from_fn(p.z.len(), p.z.len(), |a, b| s * p.l[(a, b)] - p.m[(a, b)])
}

fn frobenius(m: &Mat<C64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// Hermite Loewner pencil of the samples. Points must be pairwise distinct.
pub fn build_pencil(samples: &[TransferSample]) -> Result<LoewnerPencil> {
    let n = samples.len();
    if n < 2 {
        return Err(MorError::InvalidInput(format!("need at least 2 samples, got {n}")));
    }
    for i in 0..n {
        for j in i + 1..n {
            if too_close(samples[i].point, samples[j].point) {
                return Err(MorError::DuplicatePoints(i, j));
            }
        }
    }
    let mut l = Mat::<C64>::zeros(n, n);
    let mut m = Mat::<C64>::zeros(n, n);
    for i in 0..n {
        let (si, fi) = (samples[i].point, samples[i].value);
        for j in 0..n {
            if i == j {
                l[(i, i)] = samples[i].derivative;
                m[(i, i)] = fi + si * samples[i].derivative;
            } else {
                let (sj, fj) = (samples[j].point, samples[j].value);
                let ds = si - sj;
                l[(i, j)] = (fi - fj) / ds;
                m[(i, j)] = (si * fi - sj * fj) / ds;
            }
        }
    }
    let mut pencil = LoewnerPencil {
        points: samples.iter().map(|s| s.point).collect(),
        l,
        m,
        z: samples.iter().map(|s| s.value).collect(),
        singular_values: Vec::new(),
        pivot_index: 0,
    };
    let pivot = probe_indices(&pencil.points)
        .into_iter()
        .map(|i| (i, frobenius(&shifted(&pencil, i))))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    pencil.pivot_index = pivot;
    pencil.singular_values = linalg::singular_values_complex(shifted(&pencil, pivot).as_ref())?;
    Ok(pencil)
}

impl LoewnerPencil {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `index,sigma,relative` rows of the pivot singular values.
    pub fn singular_values_csv(&self) -> String {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        let mut out = String::from("index,sigma,relative\n");
        for (i, s) in self.singular_values.iter().enumerate() {
            let rel = if top > 0.0 { s / top } else { 0.0 };
            out.push_str(&format!("{},{:.6e},{:.6e}\n", i + 1, s, rel));
        }
        out
    }
}

/// Ranks found by [`check_rank_condition`].
#[derive(Clone, Debug, PartialEq)]
pub struct RankCheck {
    pub rank: usize,
    pub shifted_ranks: Vec<usize>,
    pub rank_lm_wide: usize,
    pub rank_lm_tall: usize,
    pub satisfied: bool,
}

/// Rows, then columns, scaled to unit 2-norm. Rank is unchanged, but the
/// spread of magnitudes across samples no longer masks small directions.
fn equilibrated(m: &Mat<C64>) -> Mat<C64> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        let norm = (0..out.ncols()).map(|j| out[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for j in 0..out.ncols() {
                out[(i, j)] /= norm;
            }
        }
    }
    for j in 0..out.ncols() {
        let norm = (0..out.nrows()).map(|i| out[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..out.nrows() {
                out[(i, j)] /= norm;
            }
        }
    }
    out
}

fn rank_of(m: &Mat<C64>, tol: f64) -> Result<usize> {
    Ok(linalg::numerical_rank(&linalg::singular_values_complex(equilibrated(m).as_ref())?, tol))
}

fn rank_check(p: &LoewnerPencil, tol: f64, indices: &[usize]) -> Result<RankCheck> {
    let n = p.len();
    let wide = Mat::from_fn(n, 2 * n, |i, j| if j < n { p.l[(i, j)] } else { p.m[(i, j - n)] });
    let tall = Mat::from_fn(2 * n, n, |i, j| if i < n { p.l[(i, j)] } else { p.m[(i - n, j)] });
    let rank_lm_wide = rank_of(&wide, tol)?;
    let rank_lm_tall = rank_of(&tall, tol)?;
    let shifted_ranks = indices
        .iter()
        .map(|&i| rank_of(&shifted(p, i), tol))
        .collect::<Result<Vec<_>>>()?;
    let satisfied = rank_lm_wide == rank_lm_tall && shifted_ranks.iter().all(|&r| r == rank_lm_wide);
    Ok(RankCheck { rank: rank_lm_wide, shifted_ranks, rank_lm_wide, rank_lm_tall, satisfied })
}

/// Checks that `s_i L - M`, `[L M]` and `[L; M]` share one numerical rank,
/// probing the smallest, median and largest `|s_i|`.
pub fn check_rank_condition(p: &LoewnerPencil, tol: f64) -> Result<RankCheck> {
    rank_check(p, tol, &probe_indices(&p.points))
}

/// Same as [`check_rank_condition`] but over every sample point.
pub fn check_rank_condition_full(p: &LoewnerPencil, tol: f64) -> Result<RankCheck> {
    let all: Vec<usize> = (0..p.len()).collect();
    rank_check(p, tol, &all)
}

/// Order selection for [`extract_surrogate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurrogateOrder {
    Fixed(usize),
    /// Keep singular values with `sigma_i / sigma_1 >= tol`, at most `cap`.
    Auto { tol: f64, cap: Option<usize> },
}

impl Default for SurrogateOrder {
    fn default() -> Self {
        SurrogateOrder::Auto { tol: DEFAULT_AUTO_TOL, cap: None }
    }
}

/// Order-k descriptor realization `F_k(s) = ck^T (s Ek - Ak)^{-1} bk`.
#[derive(Clone, Debug)]
pub struct Surrogate {
    pub k: usize,
    pub ek: Mat<C64>,
    pub ak: Mat<C64>,
    pub bk: Vec<C64>,
    pub ck: Vec<C64>,
    pub truncation_tail: Vec<f64>,
    pub pivot_index: usize,
}

fn order_from(sig: &[f64], ell: usize, order: SurrogateOrder) -> usize {
    match order {
        SurrogateOrder::Fixed(k) => k.min(ell),
        SurrogateOrder::Auto { tol, cap } => {
            let top = sig.first().copied().unwrap_or(0.0);
            let auto = if top > 0.0 { sig.iter().take_while(|&&s| s >= tol * top).count() } else { 0 };
            auto.min(cap.unwrap_or(ell)).min(ell)
        }
    }
}

/// The order [`extract_surrogate`] would use for this pencil.
pub fn resolve_order(p: &LoewnerPencil, order: SurrogateOrder) -> usize {
    order_from(&p.singular_values, p.len(), order)
}

/// Truncated-SVD realization from the pivot `s_p L - M = Y S X^*`.
pub fn extract_surrogate(p: &LoewnerPencil, order: SurrogateOrder) -> Result<Surrogate> {
    let ell = p.len();
    let (y, sig, x) = linalg::svd_complex(shifted(p, p.pivot_index).as_ref())?;
    if let SurrogateOrder::Fixed(k) = order {
        if k > ell {
            return Err(MorError::InvalidInput(format!("surrogate order {k} exceeds {ell} samples")));
        }
    }
    let k = order_from(&sig, ell, order);
    let yk = Mat::from_fn(ell, k, |i, j| y[(i, j)]);
    let xk = Mat::from_fn(ell, k, |i, j| x[(i, j)]);
    let yh = yk.adjoint().to_owned();
    let ek = -(&yh * &p.l * &xk);
    let ak = -(&yh * &p.m * &xk);
    let bk = linalg::mat_vec(yh.as_ref(), &p.z);
    let ck = (0..k).map(|j| (0..ell).map(|i| p.z[i] * xk[(i, j)]).sum()).collect();
    if k > 0 && DenseLu::new(ek.as_ref()).is_none() {
        return Err(MorError::SingularEk);
    }
    Ok(Surrogate {
        k,
        ek,
        ak,
        bk,
        ck,
        truncation_tail: sig[k.min(sig.len())..].to_vec(),
        pivot_index: p.pivot_index,
    })
}

impl Surrogate {
    pub fn eval(&self, s: C64) -> Result<C64> {
        if self.k == 0 {
            return Ok(ZERO);
        }
        let m = Mat::from_fn(self.k, self.k, |i, j| s * self.ek[(i, j)] - self.ak[(i, j)]);
        let lu = DenseLu::new(m.as_ref()).ok_or(MorError::SingularShift(s))?;
        Ok(linalg::dot(&self.ck, &lu.solve_vec(&self.bk)))
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        linalg::complex_pencil_eigenvalues(self.ak.as_ref(), self.ek.as_ref())
    }
}

/// Largest deviation of the surrogate from `H - H_r^0` on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateDeviation {
    pub max_deviation: f64,
    pub at_frequency: f64,
    pub max_error: f64,
}

pub fn surrogate_error_report(
    surr: &Surrogate,
    sys: &LtiSystem,
    core: &ReducedModel,
    grid: &FrequencyGrid,
) -> Result<SurrogateDeviation> {
    let mut out = SurrogateDeviation { max_deviation: 0.0, at_frequency: grid.points()[0], max_error: 0.0 };
    for &w in grid.points() {
        let s = C64::new(0.0, w);
        let f = sys.eval(s)? - core.eval(s)?;
        let dev = (surr.eval(s)? - f).norm();
        out.max_error = out.max_error.max(f.norm());
        if dev > out.max_deviation {
            out.max_deviation = dev;
            out.at_frequency = w;
        }
    }
    Ok(out)
}

//! Primitive rational Krylov bases and the Petrov-Galerkin reduced model.

use faer::Mat;
use rayon::prelude::*;

use crate::error::{MorError, Result};
use crate::linalg::{self, DenseLu, C64, ONE, ZERO};
use crate::statespace::{LtiSystem, TransferSample};

/// Column scaling of the primitive bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scaling {
    None,
    #[default]
    UnitColumn,
}

/// Bases `V = [(s_i E - A)^{-1} b]` and `W = [(s_i E - A)^{-T} c]`, each
/// column multiplied by its recorded scale.
#[derive(Clone, Debug)]
pub struct InterpolationBasis {
    pub points: Vec<C64>,
    pub v: Mat<C64>,
    pub w: Mat<C64>,
    pub v_scales: Vec<f64>,
    pub w_scales: Vec<f64>,
}

impl InterpolationBasis {
    pub fn order(&self) -> usize {
        self.points.len()
    }
}

/// Two points closer than this (relative) are treated as the same shift.
pub(crate) fn points_coincide(a: C64, b: C64) -> bool {
    (a - b).norm() < 1e-10 * (1.0 + a.norm())
}

fn check_distinct(points: &[C64]) -> Result<()> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points_coincide(points[i], points[j]) {
                return Err(MorError::RankDeficient(format!(
                    "shifts {} and {} coincide ({})",
                    i, j, points[i]
                )));
            }
        }
    }
    Ok(())
}

struct Column {
    x: Vec<C64>,
    y: Vec<C64>,
    sample: TransferSample,
}

fn solve_point(sys: &LtiSystem, s: C64) -> Result<Column> {
    let f = sys.factor_shift(s)?;
    let x = f.solve(&sys.b_complex())?;
    let y = f.solve_transpose(&sys.c_complex())?;
    let value = linalg::dot(&sys.c_complex(), &x) + sys.d();
    let derivative = -linalg::dot(&y, &sys.e_mul(&x));
    Ok(Column { x, y, sample: TransferSample { point: s, value, derivative } })
}

fn conjugate_partner(points: &[C64], i: usize) -> Option<usize> {
    let target = points[i].conj();
    (0..points.len())
        .filter(|&j| j != i && points[j].im > 0.0)
        .find(|&j| (points[j] - target).norm() <= 1e-12 * (1.0 + target.norm()))
}

/// Builds the bases and returns, alongside, the Hermite samples
/// `(s_i, H(s_i), H'(s_i))` read off the same solves.
pub fn build_basis_with_samples(
    sys: &LtiSystem,
    points: &[C64],
    scaling: Scaling,
) -> Result<(InterpolationBasis, Vec<TransferSample>)> {
    let r = points.len();
    if r == 0 {
        return Err(MorError::InvalidInput("no interpolation points".into()));
    }
    check_distinct(points)?;
    // lower-half-plane members of a conjugate pair reuse the partner's solve
    let partner: Vec<Option<usize>> = (0..r)
        .map(|i| if points[i].im < 0.0 { conjugate_partner(points, i) } else { None })
        .collect();
    let solved: Vec<Option<Column>> = (0..r)
        .into_par_iter()
        .map(|i| match partner[i] {
            Some(_) => Ok(None),
            None => solve_point(sys, points[i]).map(Some),
        })
        .collect::<Result<_>>()?;

    let n = sys.n();
    let mut v = Mat::<C64>::zeros(n, r);
    let mut w = Mat::<C64>::zeros(n, r);
    let mut v_scales = vec![1.0; r];
    let mut w_scales = vec![1.0; r];
    let mut samples = Vec::with_capacity(r);
    for i in 0..r {
        let (x, y, sample) = match (&solved[i], partner[i]) {
            (Some(col), _) => (col.x.clone(), col.y.clone(), col.sample),
            (None, Some(j)) => {
                let col = solved[j].as_ref().expect("partner solved");
                (
                    col.x.iter().map(|z| z.conj()).collect::<Vec<_>>(),
                    col.y.iter().map(|z| z.conj()).collect::<Vec<_>>(),
                    TransferSample { point: points[i], ..col.sample.conj() },
                )
            }
            (None, None) => unreachable!(),
        };
        if scaling == Scaling::UnitColumn {
            let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nx == 0.0 || ny == 0.0 {
                return Err(MorError::RankDeficient(format!("zero basis column at shift {}", points[i])));
            }
            v_scales[i] = 1.0 / nx;
            w_scales[i] = 1.0 / ny;
        }
        for k in 0..n {
            v[(k, i)] = x[k] * v_scales[i];
            w[(k, i)] = y[k] * w_scales[i];
        }
        samples.push(sample);
    }
    check_rank(&v, "V")?;
    check_rank(&w, "W")?;
    Ok((InterpolationBasis { points: points.to_vec(), v, w, v_scales, w_scales }, samples))
}

pub fn build_basis(sys: &LtiSystem, points: &[C64], scaling: Scaling) -> Result<InterpolationBasis> {
    build_basis_with_samples(sys, points, scaling).map(|(basis, _)| basis)
}

fn check_rank(m: &Mat<C64>, name: &str) -> Result<()> {
    // column-normalize first so the test is about directions, not scales
    let mut unit = m.clone();
    for j in 0..m.ncols() {
        let nrm = (0..m.nrows()).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(MorError::RankDeficient(format!("{name} has a zero column")));
        }
        for i in 0..m.nrows() {
            unit[(i, j)] = m[(i, j)] / nrm;
        }
    }
    let s = linalg::singular_values_complex(unit.as_ref())?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if s.len() < m.ncols() || smin <= 1e-13 * smax {
        return Err(MorError::RankDeficient(format!(
            "{name} lost column rank (sigma_min/sigma_max = {:.3e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    Ok(())
}

/// Order-r descriptor realization `H_r(s) = cr^T (s Er - Ar)^{-1} br + dr`
/// together with the scaled ones vectors used by the feed-forward family.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub er: Mat<C64>,
    pub ar: Mat<C64>,
    pub br: Vec<C64>,
    pub cr: Vec<C64>,
    pub dr: f64,
    pub u_ones: Vec<C64>,
    pub w_ones: Vec<C64>,
    /// Interpolation points the model was built from (empty if none).
    pub shifts: Vec<C64>,
}

impl ReducedModel {
    /// Wraps a real realization with no interpolation structure.
    pub fn from_real(er: Mat<f64>, ar: Mat<f64>, br: Vec<f64>, cr: Vec<f64>, dr: f64) -> Self {
        let r = ar.nrows();
        Self {
            er: linalg::to_complex(er.as_ref()),
            ar: linalg::to_complex(ar.as_ref()),
            br: br.iter().map(|&v| C64::new(v, 0.0)).collect(),
            cr: cr.iter().map(|&v| C64::new(v, 0.0)).collect(),
            dr,
            u_ones: vec![ONE; r],
            w_ones: vec![ONE; r],
            shifts: Vec::new(),
        }
    }

    /// The zero-order model `H_r = dr`.
    pub fn constant(dr: f64) -> Self {
        Self::from_real(Mat::zeros(0, 0), Mat::zeros(0, 0), vec![], vec![], dr)
    }

    pub fn order(&self) -> usize {
        self.ar.nrows()
    }

    fn factor(&self, s: C64) -> Result<DenseLu> {
        let r = self.order();
        let k = Mat::from_fn(r, r, |i, j| s * self.er[(i, j)] - self.ar[(i, j)]);
        DenseLu::new(k.as_ref()).ok_or(MorError::SingularShift(s))
    }

    pub fn eval(&self, s: C64) -> Result<C64> {
        if self.order() == 0 {
            return Ok(C64::new(self.dr, 0.0));
        }
        let x = self.factor(s)?.solve_vec(&self.br);
        Ok(linalg::dot(&self.cr, &x) + self.dr)
    }

    pub fn eval_deriv(&self, s: C64) -> Result<(C64, C64)> {
        if self.order() == 0 {
            return Ok((C64::new(self.dr, 0.0), ZERO));
        }
        let lu = self.factor(s)?;
        let x = lu.solve_vec(&self.br);
        let y = lu.solve_vec(&linalg::mat_vec(self.er.as_ref(), &x));
        Ok((linalg::dot(&self.cr, &x) + self.dr, -linalg::dot(&self.cr, &y)))
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        if self.order() == 0 {
            return Ok(Vec::new());
        }
        if self.is_real(1e-14) {
            linalg::real_pencil_eigenvalues(
                linalg::real_part(self.ar.as_ref()).as_ref(),
                linalg::real_part(self.er.as_ref()).as_ref(),
            )
        } else {
            linalg::complex_pencil_eigenvalues(self.ar.as_ref(), self.er.as_ref())
        }
    }

    pub fn is_stable(&self, margin: f64) -> Result<bool> {
        Ok(self.poles()?.iter().all(|p| p.re < -margin))
    }

    /// True if every coefficient has imaginary part below `tol` times its scale.
    pub fn is_real(&self, tol: f64) -> bool {
        let scale = |m: &Mat<C64>| linalg::max_abs(m.as_ref()).max(1e-300);
        let vec_ok = |v: &[C64]| {
            let s = v.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
            v.iter().all(|z| z.im.abs() <= tol * s)
        };
        linalg::max_imag(self.er.as_ref()) <= tol * scale(&self.er)
            && linalg::max_imag(self.ar.as_ref()) <= tol * scale(&self.ar)
            && vec_ok(&self.br)
            && vec_ok(&self.cr)
    }

    /// Real descriptor system with the same transfer function.
    pub fn to_lti(&self) -> Result<LtiSystem> {
        if !self.is_real(1e-10) {
            return Err(MorError::NotConjugateClosed(linalg::max_imag(self.ar.as_ref())));
        }
        let re = |v: &[C64]| v.iter().map(|z| z.re).collect::<Vec<_>>();
        LtiSystem::dense(
            Some(linalg::real_part(self.er.as_ref())),
            linalg::real_part(self.ar.as_ref()),
            re(&self.br),
            re(&self.cr),
            self.dr,
        )
    }
}

/// `Er = W^T E V`, `Ar = W^T A V`, `br = W^T b`, `cr = V^T c`.
pub fn project(sys: &LtiSystem, basis: &InterpolationBasis) -> Result<ReducedModel> {
    let r = basis.order();
    if r == 0 {
        return Err(MorError::InvalidInput("empty basis".into()));
    }
    let cols: Vec<(Vec<C64>, Vec<C64>)> = (0..r)
        .into_par_iter()
        .map(|j| {
            let vj: Vec<C64> = (0..sys.n()).map(|i| basis.v[(i, j)]).collect();
            (sys.e_mul(&vj), sys.a_mul(&vj))
        })
        .collect();
    let wcol = |i: usize| -> Vec<C64> { (0..sys.n()).map(|k| basis.w[(k, i)]).collect() };
    let wcols: Vec<Vec<C64>> = (0..r).map(wcol).collect();
    let er = Mat::from_fn(r, r, |i, j| linalg::dot(&wcols[i], &cols[j].0));
    let ar = Mat::from_fn(r, r, |i, j| linalg::dot(&wcols[i], &cols[j].1));
    let b = sys.b_complex();
    let c = sys.c_complex();
    let br = wcols.iter().map(|wi| linalg::dot(wi, &b)).collect();
    let cr = (0..r)
        .map(|j| (0..sys.n()).map(|i| basis.v[(i, j)] * c[i]).sum())
        .collect();
    DenseLu::new(er.as_ref()).ok_or(MorError::SingularPencil)?;
    Ok(ReducedModel {
        er,
        ar,
        br,
        cr,
        dr: 0.0,
        u_ones: basis.v_scales.iter().map(|&v| C64::new(v, 0.0)).collect(),
        w_ones: basis.w_scales.iter().map(|&v| C64::new(v, 0.0)).collect(),
        shifts: basis.points.clone(),
    })
}

/// Congruence mapping each conjugate pair of basis columns to their real
/// and imaginary parts, giving a real realization of the same function.
pub fn realify(model: &ReducedModel) -> Result<ReducedModel> {
    let r = model.order();
    if r == 0 {
        return Ok(model.clone());
    }
    let shifts = &model.shifts;
    if shifts.len() != r {
        if model.is_real(1e-12) {
            return Ok(strip_imag(model));
        }
        return Err(MorError::NotConjugateClosed(linalg::max_imag(model.ar.as_ref())));
    }
    let scale = shifts.iter().map(|s| s.norm()).fold(0.0, f64::max).max(1.0);
    let tiny = 1e-14 * scale;
    let mut upper: Vec<usize> = (0..r).filter(|&i| shifts[i].im > tiny).collect();
    let mut lower: Vec<usize> = (0..r).filter(|&i| shifts[i].im < -tiny).collect();
    let key = |s: C64| (s.im.abs(), s.re);
    let cmp = |a: &usize, b: &usize| {
        let (ka, kb) = (key(shifts[*a]), key(shifts[*b]));
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    };
    upper.sort_by(cmp);
    lower.sort_by(cmp);
    if upper.len() != lower.len() {
        return Err(MorError::NotConjugateClosed(f64::INFINITY));
    }
    let mut t = Mat::<C64>::zeros(r, r);
    for i in 0..r {
        if shifts[i].im.abs() <= tiny {
            t[(i, i)] = ONE;
        }
    }
    let half = C64::new(0.5, 0.0);
    let neg_half_i = C64::new(0.0, -0.5);
    for (&p, &q) in upper.iter().zip(&lower) {
        let gap = (shifts[p] - shifts[q].conj()).norm();
        if gap > 1e-8 * (1.0 + shifts[p].norm()) {
            return Err(MorError::NotConjugateClosed(gap));
        }
        t[(p, p)] = half;
        t[(q, p)] = half;
        t[(p, q)] = neg_half_i;
        t[(q, q)] = -neg_half_i;
    }
    let tt = t.transpose().to_owned();
    let er = &tt * &model.er * &t;
    let ar = &tt * &model.ar * &t;
    let tv = |v: &[C64]| linalg::mat_vec(tt.as_ref(), v);
    let out = ReducedModel {
        er,
        ar,
        br: tv(&model.br),
        cr: tv(&model.cr),
        dr: model.dr,
        u_ones: tv(&model.u_ones),
        w_ones: tv(&model.w_ones),
        shifts: shifts.clone(),
    };
    let residue = imaginary_residue(&out);
    if residue > 1e-8 {
        return Err(MorError::NotConjugateClosed(residue));
    }
    Ok(strip_imag(&out))
}

fn imaginary_residue(m: &ReducedModel) -> f64 {
    let rel = |imag: f64, scale: f64| if scale > 0.0 { imag / scale } else { 0.0 };
    let vec_res = |v: &[C64]| {
        let s = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        rel(v.iter().map(|z| z.im.abs()).fold(0.0, f64::max), s)
    };
    [
        rel(linalg::max_imag(m.er.as_ref()), linalg::max_abs(m.er.as_ref())),
        rel(linalg::max_imag(m.ar.as_ref()), linalg::max_abs(m.ar.as_ref())),
        vec_res(&m.br),
        vec_res(&m.cr),
        vec_res(&m.u_ones),
        vec_res(&m.w_ones),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn strip_imag(m: &ReducedModel) -> ReducedModel {
    let re = |v: &[C64]| v.iter().map(|z| C64::new(z.re, 0.0)).collect::<Vec<_>>();
    ReducedModel {
        er: linalg::to_complex(linalg::real_part(m.er.as_ref()).as_ref()),
        ar: linalg::to_complex(linalg::real_part(m.ar.as_ref()).as_ref()),
        br: re(&m.br),
        cr: re(&m.cr),
        dr: m.dr,
        u_ones: re(&m.u_ones),
        w_ones: re(&m.w_ones),
        shifts: m.shifts.clone(),
    }
}

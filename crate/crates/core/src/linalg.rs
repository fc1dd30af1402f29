//! Dense kernels shared by the reduction modules.
//!
//! Thin wrappers over faer (LU, SVD, QZ) plus a complex-Schur Bartels-Stewart
//! Lyapunov solver. Everything here works on small or desk-scale matrices.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatRef, Par};
use num_complex::Complex64;

use crate::error::{MorError, Result};

pub(crate) type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

pub(crate) fn to_complex(m: MatRef<'_, f64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

pub(crate) fn real_part(m: MatRef<'_, C64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

pub(crate) fn max_imag(m: MatRef<'_, C64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].im.abs());
        }
    }
    worst
}

pub(crate) fn max_abs(m: MatRef<'_, C64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

pub(crate) fn col_from(v: &[C64]) -> Mat<C64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub(crate) fn col_to_vec(m: MatRef<'_, C64>) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn mat_vec(m: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; m.nrows()];
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * vj;
        }
    }
    out
}

pub(crate) fn real_mat_vec(m: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        let vj = v[j];
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * vj;
        }
    }
    out
}

/// LU factorization that reports numerical singularity instead of
/// silently producing infinities.
pub(crate) struct DenseLu {
    lu: PartialPivLu<C64>,
}

impl DenseLu {
    /// Factorizes `m`; `None` when the smallest pivot is below
    /// `n * eps * max pivot`.
    pub(crate) fn new(m: MatRef<'_, C64>) -> Option<Self> {
        let n = m.nrows();
        if n == 0 {
            return Some(Self { lu: m.partial_piv_lu() });
        }
        let lu = m.partial_piv_lu();
        let u = lu.U();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let p = u[(i, i)].norm();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if !lo.is_finite() || !hi.is_finite() || hi == 0.0 || lo <= n as f64 * f64::EPSILON * hi {
            return None;
        }
        Some(Self { lu })
    }

    pub(crate) fn solve_vec(&self, rhs: &[C64]) -> Vec<C64> {
        let x = self.lu.solve(col_from(rhs));
        col_to_vec(x.as_ref())
    }

    pub(crate) fn solve_transpose_vec(&self, rhs: &[C64]) -> Vec<C64> {
        let x = self.lu.solve_transpose(col_from(rhs));
        col_to_vec(x.as_ref())
    }

    pub(crate) fn solve_mat(&self, rhs: MatRef<'_, C64>) -> Mat<C64> {
        self.lu.solve(rhs)
    }
}

/// Real LU with the same singularity test as [`DenseLu`].
pub(crate) struct RealLu {
    lu: PartialPivLu<f64>,
}

impl RealLu {
    pub(crate) fn new(m: MatRef<'_, f64>) -> Option<Self> {
        let n = m.nrows();
        let lu = m.partial_piv_lu();
        if n == 0 {
            return Some(Self { lu });
        }
        let u = lu.U();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let p = u[(i, i)].abs();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if !lo.is_finite() || hi == 0.0 || lo <= n as f64 * f64::EPSILON * hi {
            return None;
        }
        Some(Self { lu })
    }

    pub(crate) fn solve_mat(&self, rhs: MatRef<'_, f64>) -> Mat<f64> {
        self.lu.solve(rhs)
    }

    pub(crate) fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        let x = self.lu.solve(Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]));
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

fn cmp_eig(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Generalized eigenvalues of the real pencil (A, E), sorted by real part
/// then imaginary part. Complex values come in exact conjugate pairs.
pub(crate) fn real_pencil_eigenvalues(a: MatRef<'_, f64>, e: MatRef<'_, f64>) -> Result<Vec<C64>> {
    // faer's real QZ can return mismatched beta values inside a 2x2 block,
    // so the complex QZ is used and the pairing restored afterwards
    let raw = complex_pencil_eigenvalues(to_complex(a).as_ref(), to_complex(e).as_ref())?;
    let mut out = conjugate_pairs(raw);
    out.sort_by(cmp_eig);
    Ok(out)
}

/// Snaps a spectrum known to be conjugate-symmetric onto exact pairs.
pub(crate) fn conjugate_pairs(mut vals: Vec<C64>) -> Vec<C64> {
    let n = vals.len();
    let mut done = vec![false; n];
    loop {
        let next = (0..n)
            .filter(|&i| !done[i])
            .max_by(|&i, &j| vals[i].im.abs().total_cmp(&vals[j].im.abs()));
        let Some(i) = next else { break };
        done[i] = true;
        if vals[i].im.abs() <= 1e-10 * vals[i].norm() || !vals[i].im.is_finite() {
            vals[i].im = 0.0;
            continue;
        }
        let target = vals[i].conj();
        let partner = (0..n)
            .filter(|&j| !done[j])
            .min_by(|&j, &k| (vals[j] - target).norm().total_cmp(&(vals[k] - target).norm()));
        match partner {
            Some(j) => {
                done[j] = true;
                let re = 0.5 * (vals[i].re + vals[j].re);
                let im = 0.5 * (vals[i].im.abs() + vals[j].im.abs());
                vals[i] = C64::new(re, im);
                vals[j] = C64::new(re, -im);
            }
            None => vals[i].im = 0.0,
        }
    }
    vals
}

/// Generalized eigenvalues of a complex pencil (A, E).
pub(crate) fn complex_pencil_eigenvalues(a: MatRef<'_, C64>, e: MatRef<'_, C64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let par = Par::Seq;
    let mut aa = a.to_owned();
    let mut ee = e.to_owned();
    let mut s = faer::diag::Diag::<C64>::zeros(n);
    let mut beta = faer::diag::Diag::<C64>::zeros(n);
    let mut buf = MemBuffer::new(faer::linalg::gevd::gevd_scratch::<C64>(
        n,
        faer::linalg::evd::ComputeEigenvectors::No,
        faer::linalg::evd::ComputeEigenvectors::No,
        par,
        Default::default(),
    ));
    faer::linalg::gevd::gevd_cplx(
        aa.as_mut(),
        ee.as_mut(),
        s.as_mut(),
        beta.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| MorError::NoConvergence("generalized eigensolver"))?;
    let mut out: Vec<C64> = (0..n)
        .map(|i| s.column_vector()[i] / beta.column_vector()[i])
        .collect();
    out.sort_by(cmp_eig);
    Ok(out)
}

pub(crate) fn eigenvalues_real(a: MatRef<'_, f64>) -> Result<Vec<C64>> {
    let mut v = a
        .eigenvalues()
        .map_err(|_| MorError::NoConvergence("eigensolver"))?;
    v.sort_by(cmp_eig);
    Ok(v)
}

pub(crate) fn eigenvalues_complex(a: MatRef<'_, C64>) -> Result<Vec<C64>> {
    let mut v = a
        .eigenvalues()
        .map_err(|_| MorError::NoConvergence("eigensolver"))?;
    v.sort_by(cmp_eig);
    Ok(v)
}

pub(crate) fn singular_values_complex(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|_| MorError::NoConvergence("SVD"))
}

pub(crate) fn singular_values_real(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|_| MorError::NoConvergence("SVD"))
}

/// Thin SVD `a = U diag(s) V^*`.
pub(crate) fn svd_complex(a: MatRef<'_, C64>) -> Result<(Mat<C64>, Vec<f64>, Mat<C64>)> {
    let svd = a.thin_svd().map_err(|_| MorError::NoConvergence("SVD"))?;
    let s = (0..svd.S().dim())
        .map(|i| svd.S().column_vector()[i].re)
        .collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

pub(crate) fn svd_real(a: MatRef<'_, f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let svd = a.thin_svd().map_err(|_| MorError::NoConvergence("SVD"))?;
    let s = (0..svd.S().dim())
        .map(|i| svd.S().column_vector()[i])
        .collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

/// Number of singular values above `tol * sigma_max`.
pub(crate) fn numerical_rank(sigmas: &[f64], tol: f64) -> usize {
    let top = sigmas.iter().cloned().fold(0.0f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sigmas.iter().filter(|&&s| s > tol * top).count()
}

/// Complex Schur form `a = Z T Z^*` with `T` upper triangular.
fn complex_schur(a: MatRef<'_, C64>) -> Result<(Mat<C64>, Mat<C64>)> {
    let n = a.nrows();
    let m = nalgebra::DMatrix::<C64>::from_fn(n, n, |i, j| a[(i, j)]);
    let schur = nalgebra::Schur::try_new(m, f64::EPSILON, 100 * n.max(10))
        .ok_or(MorError::NoConvergence("Schur decomposition"))?;
    let (q, t) = schur.unpack();
    let z = Mat::from_fn(n, n, |i, j| q[(i, j)]);
    let t = Mat::from_fn(n, n, |i, j| if i > j { ZERO } else { t[(i, j)] });
    Ok((z, t))
}

/// Solves `A X + X A^T + Q = 0` for real `A` (Bartels-Stewart on the
/// complex Schur form of `A`). Requires `A` to have no eigenvalue pair
/// with `l_i + conj(l_j) = 0`.
pub(crate) fn lyapunov(a: MatRef<'_, f64>, q: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let (z, t) = complex_schur(to_complex(a).as_ref())?;
    // C = -Z^* Q Z
    let qc = to_complex(q);
    let c = -(z.adjoint() * &qc * &z);
    // T Y + Y T^* = C, columns from the right
    let mut y = Mat::<C64>::zeros(n, n);
    for j in (0..n).rev() {
        let mut rhs: Vec<C64> = (0..n).map(|i| c[(i, j)]).collect();
        for k in (j + 1)..n {
            let tjk = t[(j, k)].conj();
            if tjk == ZERO {
                continue;
            }
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= tjk * y[(i, k)];
            }
        }
        let shift = t[(j, j)].conj();
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for k in (i + 1)..n {
                acc -= t[(i, k)] * y[(k, j)];
            }
            let diag = t[(i, i)] + shift;
            if diag.norm() <= f64::EPSILON * (1.0 + t[(i, i)].norm()) {
                return Err(MorError::UnstableSystem(t[(i, i)].re));
            }
            y[(i, j)] = acc / diag;
        }
    }
    let x = &z * &y * z.adjoint();
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (x[(i, j)].re + x[(j, i)].re)))
}

/// Factor `L` with `P ~ L L^T` for a symmetric positive semidefinite `P`,
/// from its symmetric eigendecomposition (negative rounding noise clipped).
pub(crate) fn psd_factor(p: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = p.nrows();
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (p[(i, j)] + p[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| MorError::NoConvergence("symmetric eigensolver"))?;
    let u = evd.U();
    let s = evd.S();
    Ok(Mat::from_fn(n, n, |i, j| {
        u[(i, j)] * s.column_vector()[j].max(0.0).sqrt()
    }))
}

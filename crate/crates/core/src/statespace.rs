//! SISO descriptor systems `E x' = A x + b u, y = c^T x + d u` and the
//! pointwise transfer-function services built on shifted solves.

use std::sync::{Arc, OnceLock};

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat, SymbolicSparseColMatRef};
use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{MorError, Result};
use crate::linalg::{self, DenseLu, RealLu, C64, ZERO};

/// Default cap on the state dimension for dense eigen/Lyapunov work.
pub const DEFAULT_DENSE_CAP: usize = 5000;

/// Compressed sparse column matrix with sorted, unique row indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(MorError::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(MorError::InvalidInput(format!("non-finite entry at ({i}, {j})")));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(&y.0)));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_idx.push(i);
            values.push(v);
            col_ptr[j + 1] += 1;
            last = Some((i, j));
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self { nrows, ncols, col_ptr, row_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &Mat<f64>) -> Self {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t).expect("dense matrix entries are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], j, self.values[k]))
        })
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += xj * self.values[k];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}

/// Storage of the system matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageKind {
    Dense,
    Sparse,
}

#[derive(Clone, Debug)]
pub enum SysMatrix {
    Dense(Mat<f64>),
    Sparse(CscMatrix),
}

impl SysMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            SysMatrix::Dense(m) => m.nrows(),
            SysMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            SysMatrix::Dense(m) => m.ncols(),
            SysMatrix::Sparse(m) => m.ncols(),
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        match self {
            SysMatrix::Dense(m) => {
                let mut y = vec![ZERO; m.nrows()];
                for j in 0..m.ncols() {
                    let xj = x[j];
                    if xj == ZERO {
                        continue;
                    }
                    for (i, yi) in y.iter_mut().enumerate() {
                        *yi += xj * m[(i, j)];
                    }
                }
                y
            }
            SysMatrix::Sparse(m) => m.mul_vec(x),
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            SysMatrix::Dense(m) => m.clone(),
            SysMatrix::Sparse(m) => m.to_dense(),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            SysMatrix::Dense(m) => (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite())),
            SysMatrix::Sparse(m) => m.values.iter().all(|v| v.is_finite()),
        }
    }
}

/// Union sparsity pattern of E and A with a cached symbolic LU, shared by
/// every shifted factorization `alpha E - beta A`.
#[derive(Debug)]
struct ShiftPattern {
    symbolic: SymbolicSparseColMat<usize>,
    e_vals: Vec<f64>,
    a_vals: Vec<f64>,
    lu: SymbolicLu<usize>,
}

impl ShiftPattern {
    fn new(e: &CscMatrix, a: &CscMatrix) -> Result<Self> {
        let n = e.nrows();
        let mut entries: Vec<(usize, usize, f64, f64)> = e
            .triplets()
            .map(|(i, j, v)| (i, j, v, 0.0))
            .chain(a.triplets().map(|(i, j, v)| (i, j, 0.0, v)))
            .collect();
        // structurally nonzero diagonal keeps the symbolic LU well defined
        entries.extend((0..n).map(|i| (i, i, 0.0, 0.0)));
        entries.sort_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(&y.0)));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        let mut e_vals: Vec<f64> = Vec::new();
        let mut a_vals: Vec<f64> = Vec::new();
        let mut last = None;
        for (i, j, ev, av) in entries {
            if last == Some((i, j)) {
                *e_vals.last_mut().unwrap() += ev;
                *a_vals.last_mut().unwrap() += av;
                continue;
            }
            last = Some((i, j));
            row_idx.push(i);
            e_vals.push(ev);
            a_vals.push(av);
            col_ptr[j + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let lu = SymbolicLu::try_new(symbolic.as_ref())
            .map_err(|e| MorError::InvalidInput(format!("symbolic LU failed: {e:?}")))?;
        Ok(Self { symbolic, e_vals, a_vals, lu })
    }

    fn symbolic_ref(&self) -> SymbolicSparseColMatRef<'_, usize> {
        self.symbolic.as_ref()
    }
}

/// A factorization of `alpha E - beta A` reused for several solves.
pub struct ShiftedSolve {
    shift: C64,
    inner: Factor,
}

enum Factor {
    Dense(DenseLu),
    Sparse(Lu<usize, C64>),
}

impl ShiftedSolve {
    pub fn shift(&self) -> C64 {
        self.shift
    }

    /// Solves `(sE - A) x = rhs`.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let x = match &self.inner {
            Factor::Dense(lu) => lu.solve_vec(rhs),
            Factor::Sparse(lu) => {
                let x = lu.solve(linalg::col_from(rhs));
                linalg::col_to_vec(x.as_ref())
            }
        };
        self.check(x)
    }

    /// Solves `(sE - A)^T x = rhs` (plain transpose).
    pub fn solve_transpose(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let x = match &self.inner {
            Factor::Dense(lu) => lu.solve_transpose_vec(rhs),
            Factor::Sparse(lu) => {
                let x = lu.solve_transpose(linalg::col_from(rhs));
                linalg::col_to_vec(x.as_ref())
            }
        };
        self.check(x)
    }

    fn check(&self, x: Vec<C64>) -> Result<Vec<C64>> {
        if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(x)
        } else {
            Err(MorError::SingularShift(self.shift))
        }
    }
}

/// One Hermite sample of a transfer function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferSample {
    pub point: C64,
    pub value: C64,
    pub derivative: C64,
}

impl TransferSample {
    pub fn conj(&self) -> Self {
        Self {
            point: self.point.conj(),
            value: self.value.conj(),
            derivative: self.derivative.conj(),
        }
    }
}

/// Full- or reduced-order SISO descriptor realization `(E, A, b, c, d)`.
#[derive(Clone, Debug)]
pub struct LtiSystem {
    e: SysMatrix,
    a: SysMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
    dense_cap: usize,
    pattern: OnceLock<Arc<ShiftPattern>>,
}

impl LtiSystem {
    /// Dense realization; `e = None` means `E = I`.
    pub fn dense(e: Option<Mat<f64>>, a: Mat<f64>, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        let n = a.nrows();
        let e = e.unwrap_or_else(|| Mat::identity(n, n));
        Self::build(SysMatrix::Dense(e), SysMatrix::Dense(a), b, c, d)
    }

    /// Sparse realization; `e = None` means `E = I`.
    pub fn sparse(e: Option<CscMatrix>, a: CscMatrix, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        let n = a.nrows();
        let e = e.unwrap_or_else(|| CscMatrix::identity(n));
        Self::build(SysMatrix::Sparse(e), SysMatrix::Sparse(a), b, c, d)
    }

    /// `E = I` dense realization.
    pub fn standard(a: Mat<f64>, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        Self::dense(None, a, b, c, d)
    }

    fn build(e: SysMatrix, a: SysMatrix, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(MorError::DimensionMismatch(format!("A is {}x{}", n, a.ncols())));
        }
        if e.nrows() != n || e.ncols() != n {
            return Err(MorError::DimensionMismatch(format!(
                "E is {}x{} but A is {n}x{n}",
                e.nrows(),
                e.ncols()
            )));
        }
        if b.len() != n || c.len() != n {
            return Err(MorError::DimensionMismatch(format!(
                "b has length {}, c has length {}, state dimension is {n}",
                b.len(),
                c.len()
            )));
        }
        if !e.is_finite() || !a.is_finite() || !b.iter().chain(&c).all(|v| v.is_finite()) || !d.is_finite() {
            return Err(MorError::InvalidInput("non-finite system data".into()));
        }
        let sys = Self {
            e,
            a,
            b,
            c,
            d,
            dense_cap: DEFAULT_DENSE_CAP,
            pattern: OnceLock::new(),
        };
        sys.check_e_nonsingular()?;
        Ok(sys)
    }

    fn check_e_nonsingular(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Ok(());
        }
        match &self.e {
            SysMatrix::Dense(e) => {
                RealLu::new(e.as_ref()).ok_or(MorError::SingularE)?;
            }
            SysMatrix::Sparse(_) => {
                let f = self.factor_combination(C64::new(1.0, 0.0), ZERO).map_err(|_| MorError::SingularE)?;
                let ones = vec![C64::new(1.0, 0.0); n];
                f.solve(&ones).map_err(|_| MorError::SingularE)?;
            }
        }
        Ok(())
    }

    pub fn with_dense_cap(mut self, cap: usize) -> Self {
        self.dense_cap = cap;
        self
    }

    /// Same realization with feed-forward term `d`.
    pub fn with_d(&self, d: f64) -> Self {
        let mut out = self.clone();
        out.d = d;
        out
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn storage_kind(&self) -> StorageKind {
        match self.a {
            SysMatrix::Dense(_) => StorageKind::Dense,
            SysMatrix::Sparse(_) => StorageKind::Sparse,
        }
    }

    pub fn e(&self) -> &SysMatrix {
        &self.e
    }

    pub fn a(&self) -> &SysMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn dense_cap(&self) -> usize {
        self.dense_cap
    }

    pub fn b_complex(&self) -> Vec<C64> {
        self.b.iter().map(|&v| C64::new(v, 0.0)).collect()
    }

    pub fn c_complex(&self) -> Vec<C64> {
        self.c.iter().map(|&v| C64::new(v, 0.0)).collect()
    }

    pub fn e_mul(&self, x: &[C64]) -> Vec<C64> {
        self.e.mul_vec(x)
    }

    pub fn a_mul(&self, x: &[C64]) -> Vec<C64> {
        self.a.mul_vec(x)
    }

    fn check_dense_cap(&self) -> Result<()> {
        if self.n() > self.dense_cap {
            return Err(MorError::DimensionTooLarge { n: self.n(), cap: self.dense_cap });
        }
        Ok(())
    }

    /// Dense copies of `(E, A)`; subject to the dense cap.
    pub fn dense_pencil(&self) -> Result<(Mat<f64>, Mat<f64>)> {
        self.check_dense_cap()?;
        Ok((self.e.to_dense(), self.a.to_dense()))
    }

    /// Standard-form data `(E^{-1} A, E^{-1} b, c, d)` from an LU of `E`.
    pub fn standard_form(&self) -> Result<(Mat<f64>, Vec<f64>, Vec<f64>, f64)> {
        let (e, a) = self.dense_pencil()?;
        let lu = RealLu::new(e.as_ref()).ok_or(MorError::SingularE)?;
        let a_std = lu.solve_mat(a.as_ref());
        let b_std = lu.solve_vec(&self.b);
        Ok((a_std, b_std, self.c.clone(), self.d))
    }

    fn factor_combination(&self, alpha: C64, beta: C64) -> Result<ShiftedSolve> {
        let inner = match (&self.e, &self.a) {
            (SysMatrix::Dense(e), SysMatrix::Dense(a)) => {
                let n = self.n();
                let m = Mat::from_fn(n, n, |i, j| alpha * e[(i, j)] - beta * a[(i, j)]);
                Factor::Dense(DenseLu::new(m.as_ref()).ok_or(MorError::SingularShift(alpha))?)
            }
            (SysMatrix::Sparse(e), SysMatrix::Sparse(a)) => {
                let pattern = match self.pattern.get() {
                    Some(p) => p.clone(),
                    None => {
                        let p = Arc::new(ShiftPattern::new(e, a)?);
                        let _ = self.pattern.set(p.clone());
                        p
                    }
                };
                let vals: Vec<C64> = pattern
                    .e_vals
                    .iter()
                    .zip(&pattern.a_vals)
                    .map(|(&ev, &av)| alpha * ev - beta * av)
                    .collect();
                let mat = SparseColMatRef::new(pattern.symbolic_ref(), &vals);
                let lu = Lu::try_new_with_symbolic(pattern.lu.clone(), mat)
                    .map_err(|_| MorError::SingularShift(alpha))?;
                Factor::Sparse(lu)
            }
            _ => unreachable!("E and A always share a storage kind"),
        };
        Ok(ShiftedSolve { shift: alpha, inner })
    }

    /// Factorization of `sE - A`.
    pub fn factor_shift(&self, s: C64) -> Result<ShiftedSolve> {
        self.factor_combination(s, C64::new(1.0, 0.0))
    }

    /// Factorization of `E` alone.
    pub fn factor_e(&self) -> Result<ShiftedSolve> {
        self.factor_combination(C64::new(1.0, 0.0), ZERO).map_err(|_| MorError::SingularE)
    }

    /// `H(s) = c^T (sE - A)^{-1} b + d` from one factorize-and-solve.
    pub fn eval(&self, s: C64) -> Result<C64> {
        let f = self.factor_shift(s)?;
        let x = f.solve(&self.b_complex())?;
        Ok(self.output(&x) + self.d)
    }

    /// `(H(s), H'(s))` with `H'(s) = -c^T (sE-A)^{-1} E (sE-A)^{-1} b`,
    /// sharing a single factorization.
    pub fn eval_deriv(&self, s: C64) -> Result<(C64, C64)> {
        let f = self.factor_shift(s)?;
        let x = f.solve(&self.b_complex())?;
        let y = f.solve(&self.e_mul(&x))?;
        Ok((self.output(&x) + self.d, -self.output(&y)))
    }

    pub fn sample(&self, s: C64) -> Result<TransferSample> {
        let (value, derivative) = self.eval_deriv(s)?;
        Ok(TransferSample { point: s, value, derivative })
    }

    /// Parallel evaluation; output order follows `points`.
    pub fn eval_many(&self, points: &[C64]) -> Result<Vec<C64>> {
        points.par_iter().map(|&s| self.eval(s)).collect()
    }

    fn output(&self, x: &[C64]) -> C64 {
        self.c.iter().zip(x).map(|(&ci, xi)| xi * ci).sum()
    }

    /// Generalized eigenvalues of `(A, E)`, sorted by real then imaginary part.
    pub fn poles(&self) -> Result<Vec<C64>> {
        let (e, a) = self.dense_pencil()?;
        linalg::real_pencil_eigenvalues(a.as_ref(), e.as_ref())
    }

    /// True iff every pole has `Re < -margin`.
    pub fn is_stable(&self, margin: f64) -> Result<bool> {
        Ok(self.poles()?.iter().all(|p| p.re < -margin))
    }

    /// State-space-symmetric test: `E = E^T > 0`, `A = A^T`, `c = b`.
    pub fn is_state_space_symmetric(&self, tol: f64) -> bool {
        let bnorm = self.b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        if self.b.iter().zip(&self.c).any(|(x, y)| (x - y).abs() > tol * bnorm) {
            return false;
        }
        let symmetric = |m: &SysMatrix| -> bool {
            let t: Vec<(usize, usize, f64)> = match m {
                SysMatrix::Dense(d) => {
                    let mut v = Vec::new();
                    for j in 0..d.ncols() {
                        for i in 0..d.nrows() {
                            if d[(i, j)] != 0.0 {
                                v.push((i, j, d[(i, j)]));
                            }
                        }
                    }
                    v
                }
                SysMatrix::Sparse(s) => s.triplets().collect(),
            };
            let scale = t.iter().map(|x| x.2.abs()).fold(0.0, f64::max).max(1e-300);
            let map: std::collections::HashMap<(usize, usize), f64> =
                t.iter().map(|&(i, j, v)| ((i, j), v)).collect();
            t.iter().all(|&(i, j, v)| {
                let w = map.get(&(j, i)).copied().unwrap_or(0.0);
                (v - w).abs() <= tol * scale
            })
        };
        if !symmetric(&self.e) || !symmetric(&self.a) {
            return false;
        }
        // positive definiteness of E via Cholesky on the dense copy, when affordable
        if self.n() <= self.dense_cap {
            let e = self.e.to_dense();
            return e.llt(faer::Side::Lower).is_ok();
        }
        true
    }
}

/// Spacing of a [`FrequencyGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Logarithmic,
}

/// Strictly increasing, finite, nonempty list of real frequencies (rad/s).
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    spacing: Spacing,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if points.is_empty() {
            return Err(MorError::InvalidInput("frequency grid is empty".into()));
        }
        if points.iter().any(|w| !w.is_finite()) {
            return Err(MorError::InvalidInput("frequency grid has non-finite points".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MorError::InvalidInput("frequency grid is not strictly increasing".into()));
        }
        Ok(Self { points, spacing })
    }

    pub fn logspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || count == 0 {
            return Err(MorError::InvalidInput(format!("bad log grid [{lo}, {hi}] x {count}")));
        }
        if count == 1 {
            return Self::new(vec![lo], Spacing::Logarithmic);
        }
        let (l, h) = (lo.log10(), hi.log10());
        let pts = (0..count)
            .map(|k| 10f64.powf(l + (h - l) * k as f64 / (count - 1) as f64))
            .collect();
        Self::new(pts, Spacing::Logarithmic)
    }

    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(hi > lo) || count < 2 {
            return Err(MorError::InvalidInput(format!("bad linear grid [{lo}, {hi}] x {count}")));
        }
        let pts = (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect();
        Self::new(pts, Spacing::Linear)
    }

    /// 500 log-spaced points on `[1e-8, 10]`.
    pub fn default_sampled() -> Self {
        Self::logspace(1e-8, 10.0, 500).expect("constant grid is valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#![allow(dead_code)]

use faer::linalg::solvers::Solve;
use faer::Mat;
use mor_iha::{LtiSystem, TransferSample};
use num_complex::Complex64 as C64;
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Property-test settings with a fixed generator seed, so every run draws
/// the same cases.
pub fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x1ab5_e11e), failure_persistence: None, ..Config::default() }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// One first-order term `c b / (s - p)` or one rotation block
/// `[[re, im], [-im, re]]` with input `b` and output `c`.
#[derive(Clone, Debug)]
pub enum Block {
    Real { p: f64, b: f64, c: f64 },
    Pair { re: f64, im: f64, b: [f64; 2], c: [f64; 2] },
}

impl Block {
    fn eval(&self, s: C64) -> C64 {
        match *self {
            Block::Real { p, b, c } => C64::from(b * c) / (s - p),
            Block::Pair { re, im, b, c } => {
                let z = s - re;
                (z * (c[0] * b[0] + c[1] * b[1]) + im * (c[0] * b[1] - c[1] * b[0])) / (z * z + im * im)
            }
        }
    }

    fn deriv(&self, s: C64) -> C64 {
        match *self {
            Block::Real { p, b, c } => -(b * c) / ((s - p) * (s - p)),
            Block::Pair { re, im, b, c } => {
                let z = s - re;
                let alpha = c[0] * b[0] + c[1] * b[1];
                let num = z * alpha + im * (c[0] * b[1] - c[1] * b[0]);
                let den = z * z + im * im;
                (alpha * den - num * 2.0 * z) / (den * den)
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Block::Real { .. } => 1,
            Block::Pair { .. } => 2,
        }
    }
}

/// Modal form `d + sum_blocks`, the closed-form oracle for a system whose
/// realization has been hidden behind a random similarity.
#[derive(Clone, Debug)]
pub struct Modal {
    pub blocks: Vec<Block>,
    pub d: f64,
}

impl Modal {
    pub fn n(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    pub fn eval(&self, s: C64) -> C64 {
        self.blocks.iter().map(|blk| blk.eval(s)).sum::<C64>() + self.d
    }

    pub fn deriv(&self, s: C64) -> C64 {
        self.blocks.iter().map(|blk| blk.deriv(s)).sum()
    }

    pub fn sample(&self, s: C64) -> TransferSample {
        TransferSample { point: s, value: self.eval(s), derivative: self.deriv(s) }
    }

    /// Residues in the order of [`Modal::poles`].
    pub fn residues(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for blk in &self.blocks {
            match *blk {
                Block::Real { b, c, .. } => out.push(C64::from(b * c)),
                Block::Pair { b, c, .. } => {
                    // right eigenvector [1, i], left [1, -i]
                    let res = C64::new(c[0], c[1]) * C64::new(b[0], -b[1]) / 2.0;
                    out.push(res);
                    out.push(res.conj());
                }
            }
        }
        out
    }

    /// `sum_i res_i H(-p_i)`, the squared H2 norm of the strictly proper part.
    pub fn h2_norm(&self) -> f64 {
        let strict = Modal { blocks: self.blocks.clone(), d: 0.0 };
        let poles = self.poles();
        self.residues().iter().zip(&poles).map(|(r, p)| r * strict.eval(-p)).sum::<C64>().re.sqrt()
    }

    pub fn poles(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for blk in &self.blocks {
            match *blk {
                Block::Real { p, .. } => out.push(C64::new(p, 0.0)),
                Block::Pair { re, im, .. } => {
                    out.push(C64::new(re, im));
                    out.push(C64::new(re, -im));
                }
            }
        }
        out
    }

    /// Smallest and largest pole magnitude, for sweep ranges.
    pub fn pole_range(&self) -> (f64, f64) {
        let mags: Vec<f64> = self.poles().iter().map(|p| p.norm()).collect();
        (mags.iter().copied().fold(f64::INFINITY, f64::min), mags.iter().copied().fold(0.0, f64::max))
    }

    fn block_matrices(&self) -> (Mat<f64>, Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut a = Mat::zeros(n, n);
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut i = 0;
        for blk in &self.blocks {
            match *blk {
                Block::Real { p, b: bi, c: ci } => {
                    a[(i, i)] = p;
                    b[i] = bi;
                    c[i] = ci;
                    i += 1;
                }
                Block::Pair { re, im, b: bi, c: ci } => {
                    a[(i, i)] = re;
                    a[(i + 1, i + 1)] = re;
                    a[(i, i + 1)] = im;
                    a[(i + 1, i)] = -im;
                    b[i..i + 2].copy_from_slice(&bi);
                    c[i..i + 2].copy_from_slice(&ci);
                    i += 2;
                }
            }
        }
        (a, b, c)
    }
}

/// Random stable modal data of order `n`: decay rates in `[0.1, 10]`,
/// oscillating pairs with frequencies in `[0.1, 100]`.
pub fn random_modal(rng: &mut impl Rng, n: usize, with_d: bool) -> Modal {
    let mut blocks = Vec::new();
    let mut left = n;
    while left > 0 {
        let decay = 10f64.powf(rng.random_range(-1.0..1.0));
        if left >= 2 && rng.random_bool(0.5) {
            let im = 10f64.powf(rng.random_range(-1.0..2.0));
            let re = -decay.min(im) * rng.random_range(0.05..1.0);
            let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            blocks.push(Block::Pair { re, im, b, c });
            left -= 2;
        } else {
            let gain: f64 = rng.random_range(0.2..2.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            blocks.push(Block::Real { p: -decay, b: gain, c: sign * decay.sqrt() });
            left -= 1;
        }
    }
    let d = if with_d { rng.random_range(-1.0..1.0) } else { 0.0 };
    Modal { blocks, d }
}

/// Random rational of McMillan degree `m` for data-driven recovery: poles
/// spread over four decades at damping ratio above 0.25, residues scaled
/// with the pole magnitude so every mode is visible in the data.
pub fn random_rational(rng: &mut impl Rng, m: usize) -> Modal {
    let mut blocks = Vec::new();
    let mut poles: Vec<C64> = Vec::new();
    // poles pairwise at least 30% apart, or the data is numerically lower order
    let apart = |poles: &[C64], z: C64| poles.iter().all(|p| (p - z).norm() > 0.3 * p.norm().max(z.norm()));
    let mut left = m;
    while left > 0 {
        let mag = 10f64.powf(rng.random_range(-2.0..2.0));
        if left >= 2 && rng.random_bool(0.5) {
            let angle: f64 = rng.random_range(0.2..1.3);
            let z = C64::new(-mag * angle.cos(), mag * angle.sin());
            if !apart(&poles, z) {
                continue;
            }
            poles.extend([z, z.conj()]);
            let c = [mag * rng.random_range(0.5..1.5), mag * rng.random_range(-1.5..1.5)];
            blocks.push(Block::Pair { re: z.re, im: z.im, b: [1.0, 0.0], c });
            left -= 2;
        } else {
            let z = C64::new(-mag, 0.0);
            if !apart(&poles, z) {
                continue;
            }
            poles.push(z);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            blocks.push(Block::Real { p: -mag, b: 1.0, c: sign * mag * rng.random_range(0.5..1.5) });
            left -= 1;
        }
    }
    Modal { blocks, d: 0.0 }
}

/// One right-half-plane point per pole, near its mirror image: conjugate
/// closed and `modal.n()` long.
pub fn mirrored_points(rng: &mut impl Rng, modal: &Modal) -> Vec<C64> {
    let mut pts = Vec::with_capacity(modal.n());
    for blk in &modal.blocks {
        let jitter = rng.random_range(0.8..1.25);
        match *blk {
            Block::Real { p, .. } => pts.push(C64::new(-p * jitter, 0.0)),
            Block::Pair { re, im, .. } => {
                let z = C64::new(-re, im) * jitter;
                pts.push(z);
                pts.push(z.conj());
            }
        }
    }
    pts
}

fn random_near_identity(rng: &mut impl Rng, n: usize, spread: f64) -> Mat<f64> {
    let scale = spread / (n as f64).sqrt();
    Mat::from_fn(n, n, |i, j| (if i == j { 1.0 } else { 0.0 }) + scale * rng.random_range(-1.0..1.0))
}

fn inverse(m: &Mat<f64>) -> Mat<f64> {
    let n = m.nrows();
    m.partial_piv_lu().solve(Mat::<f64>::identity(n, n).as_ref())
}

fn mat_vec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

/// Dense realization of `modal` under `x = T z`; with `descriptor` set a
/// random SPD `E` is folded in (`E A~`, `E b~`) without changing `H`.
pub fn realize(rng: &mut impl Rng, modal: &Modal, descriptor: bool) -> LtiSystem {
    let n = modal.n();
    let (a0, b0, c0) = modal.block_matrices();
    let t = random_near_identity(rng, n, 0.5);
    let ti = inverse(&t);
    let a = &ti * &a0 * &t;
    let b = mat_vec(&ti, &b0);
    let c = mat_vec(&t.transpose().to_owned(), &c0);
    if descriptor {
        let g = random_near_identity(rng, n, 0.3);
        let e = &g * g.transpose();
        let ea = &e * &a;
        let eb = mat_vec(&e, &b);
        LtiSystem::dense(Some(e), ea, eb, c, modal.d).unwrap()
    } else {
        LtiSystem::standard(a, b, c, modal.d).unwrap()
    }
}

/// A random stable system together with its modal oracle.
pub fn random_system(seed: u64, n: usize) -> (LtiSystem, Modal) {
    let mut r = rng(seed);
    let with_d = r.random_bool(0.5);
    let modal = random_modal(&mut r, n, with_d);
    let descriptor = r.random_bool(0.5);
    (realize(&mut r, &modal, descriptor), modal)
}

/// Conjugate-closed points in the right half-plane, pairwise at least 30%
/// apart so the reduced pencils stay well conditioned.
pub fn rhp_points(rng: &mut impl Rng, r: usize) -> Vec<C64> {
    let mut pts: Vec<C64> = Vec::with_capacity(r);
    let apart = |pts: &[C64], z: C64| pts.iter().all(|p| (p - z).norm() > 0.3 * p.norm().max(z.norm()));
    while pts.len() < r {
        let re = 10f64.powf(rng.random_range(-1.0..1.5));
        if r - pts.len() >= 2 && rng.random_bool(0.5) {
            let im = re * 10f64.powf(rng.random_range(-0.5..1.0));
            let z = C64::new(re, im);
            if apart(&pts, z) {
                pts.push(z);
                pts.push(z.conj());
            }
        } else {
            let z = C64::new(re, 0.0);
            if apart(&pts, z) {
                pts.push(z);
            }
        }
    }
    pts
}

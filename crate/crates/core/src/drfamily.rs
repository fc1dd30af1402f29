//! One-parameter family of reduced models that keep every Hermite condition
//! of an interpolatory core while the feed-forward term `dr` varies.

use faer::Mat;

use crate::error::{MorError, Result};
use crate::linalg::{self, DenseLu, C64, ONE};
use crate::projection::ReducedModel;
use crate::statespace::LtiSystem;

/// Values of the auxiliary functions at one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GValues {
    /// Core transfer function `H_r^0(s)`.
    pub h0: C64,
    /// `u^T (s Er - Ar)^{-1} br`
    pub g1: C64,
    /// `cr^T (s Er - Ar)^{-1} w`
    pub g2: C64,
    /// `u^T (s Er - Ar)^{-1} w`
    pub g3: C64,
}

/// The core `H_r^0` with its right (`ones_u`) and left (`ones_w`) ones vectors.
#[derive(Clone, Debug)]
pub struct DrFamily {
    pub core: ReducedModel,
    pub ones_u: Vec<C64>,
    pub ones_w: Vec<C64>,
}

/// Stability verdict for one value of `dr`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrCandidate {
    pub dr: f64,
    pub stable: bool,
    /// `-max Re(lambda)` over the poles of the perturbed pencil.
    pub margin: f64,
}

impl DrFamily {
    pub fn new(core: ReducedModel) -> Self {
        let ones_u = core.u_ones.clone();
        let ones_w = core.w_ones.clone();
        Self { core, ones_u, ones_w }
    }

    pub fn order(&self) -> usize {
        self.core.order()
    }

    /// All four functions from one factorization of `s Er - Ar`.
    pub fn g_values(&self, s: C64) -> Result<GValues> {
        let r = self.order();
        let k = Mat::from_fn(r, r, |i, j| s * self.core.er[(i, j)] - self.core.ar[(i, j)]);
        let lu = DenseLu::new(k.as_ref()).ok_or(MorError::SingularShift(s))?;
        let x = lu.solve_vec(&self.core.br);
        let y = lu.solve_vec(&self.ones_w);
        Ok(GValues {
            h0: linalg::dot(&self.core.cr, &x) + self.core.dr,
            g1: linalg::dot(&self.ones_u, &x),
            g2: linalg::dot(&self.core.cr, &y),
            g3: linalg::dot(&self.ones_u, &y),
        })
    }

    /// Increment `H_r(s, dr) - H_r^0(s)`.
    pub fn increment(&self, s: C64, dr: f64) -> Result<C64> {
        let g = self.g_values(s)?;
        increment_from(&g, s, dr)
    }

    /// `H_r^0(s) + dr (G1 - 1)(G2 - 1) / (1 - dr G3)`.
    pub fn eval_family(&self, s: C64, dr: f64) -> Result<C64> {
        let g = self.g_values(s)?;
        Ok(g.h0 + increment_from(&g, s, dr)?)
    }

    /// State-space realization of the family member:
    /// `(cr - dr u)^T (s Er - Ar - dr w u^T)^{-1} (br - dr w) + dr`.
    pub fn assemble_statespace(&self, dr: f64) -> ReducedModel {
        let mut out = self.core.clone();
        if dr == 0.0 {
            return out;
        }
        let r = self.order();
        let d = C64::new(dr, 0.0);
        for i in 0..r {
            for j in 0..r {
                out.ar[(i, j)] += d * self.ones_w[i] * self.ones_u[j];
            }
            out.br[i] -= d * self.ones_w[i];
            out.cr[i] -= d * self.ones_u[i];
        }
        out.dr = self.core.dr + dr;
        out
    }

    /// Poles of `s Er - (Ar + dr w u^T)` against the required margin.
    pub fn stability_of(&self, dr: f64, margin: f64) -> Result<DrCandidate> {
        let poles = self.assemble_statespace(dr).poles()?;
        let worst = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
        Ok(DrCandidate { dr, stable: worst < -margin, margin: -worst })
    }

    /// The `dr` for which the family member also interpolates `target` at
    /// the real point `s_extra`.
    pub fn explicit_dr(&self, target: &LtiSystem, s_extra: f64) -> Result<f64> {
        if !(s_extra > 0.0) {
            return Err(MorError::InvalidInput(format!("extra point {s_extra} is not in the open right half-plane")));
        }
        let s = C64::new(s_extra, 0.0);
        if self.core.shifts.iter().any(|&p| crate::projection::points_coincide(p, s)) {
            return Err(MorError::InvalidInput(format!("{s_extra} is already an interpolation point")));
        }
        let h = target.eval(s)?;
        let g = self.g_values(s)?;
        let num = h - g.h0;
        if num.norm() == 0.0 {
            return Ok(0.0);
        }
        let a = (g.g1 - ONE) * (g.g2 - ONE);
        let b = g.g3 * num;
        let den = a + b;
        if den.norm() < 1e-14 * (a.norm() + b.norm()).max(f64::MIN_POSITIVE) {
            return Err(MorError::DegenerateDenominator(den.norm()));
        }
        let dr = (num / den).re;
        let check = self.eval_family(s, dr)?;
        if (check - h).norm() > 1e-8 * h.norm().max(1e-300) {
            return Err(MorError::DegenerateDenominator(den.norm()));
        }
        Ok(dr)
    }
}

fn increment_from(g: &GValues, s: C64, dr: f64) -> Result<C64> {
    if dr == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let dg3 = g.g3 * dr;
    let den = ONE - dg3;
    if den.norm() < 1e-14 * (1.0 + dg3.norm()) {
        return Err(MorError::FamilyPole(s));
    }
    Ok((g.g1 - ONE) * (g.g2 - ONE) * dr / den)
}

//! Seeded desk-scale test systems.

use mor_iha::{CscMatrix, LtiSystem, MorError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Symmetric `E > 0`, symmetric `A < 0`, `c = b`.
    Sss,
    /// Nonsymmetric stable system with independent `b` and `c`.
    Generic,
    /// Lightly damped mass-spring chain in first-order form.
    ResonantChain,
}

impl std::str::FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sss" => Ok(Self::Sss),
            "generic" => Ok(Self::Generic),
            "resonant-chain" => Ok(Self::ResonantChain),
            other => Err(format!("unknown synthetic kind '{other}'")),
        }
    }
}

impl std::fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sss => "sss",
            Self::Generic => "generic",
            Self::ResonantChain => "resonant-chain",
        })
    }
}

// Diagonally dominant SPD tridiagonal mass matrix.
fn mass_triplets(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, 2.0 + rng.random::<f64>()));
    }
    for i in 0..n.saturating_sub(1) {
        let v = rng.random_range(-0.5..0.5);
        t.push((i, i + 1, v));
        t.push((i + 1, i, v));
    }
    t
}

// SPD tridiagonal stiffness with diagonal spread over four decades.
fn stiffness_diag(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            10f64.powf(-1.0 + 4.0 * t) * (1.0 + 0.1 * rng.random::<f64>())
        })
        .collect()
}

fn stiffness_triplets(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let diag = stiffness_diag(n, rng);
    let mut t: Vec<(usize, usize, f64)> = diag.iter().enumerate().map(|(i, &k)| (i, i, k)).collect();
    for i in 0..n.saturating_sub(1) {
        let v = -0.4 * (diag[i] * diag[i + 1]).sqrt().min(diag[i].min(diag[i + 1])) * rng.random::<f64>();
        t.push((i, i + 1, v));
        t.push((i + 1, i, v));
    }
    t
}

fn negate(t: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    t.iter().map(|&(i, j, v)| (i, j, -v)).collect()
}

fn unit_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Deterministic stable system of the given kind and order.
pub fn make_synthetic(kind: SyntheticKind, n: usize, seed: u64) -> Result<LtiSystem, MorError> {
    if n < 2 {
        return Err(MorError::InvalidInput(format!("synthetic order must be at least 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SyntheticKind::Sss => {
            let e = CscMatrix::from_triplets(n, n, &mass_triplets(n, &mut rng))?;
            let a = CscMatrix::from_triplets(n, n, &negate(&stiffness_triplets(n, &mut rng)))?;
            let b = unit_vector(n, &mut rng);
            LtiSystem::sparse(Some(e), a, b.clone(), b, 0.0)
        }
        SyntheticKind::Generic => {
            let e = CscMatrix::from_triplets(n, n, &mass_triplets(n, &mut rng))?;
            // -K plus a skew part keeps A + A^T negative definite
            let mut a = negate(&stiffness_triplets(n, &mut rng));
            for i in 0..n {
                for j in (i + 1)..(i + 4).min(n) {
                    let v = rng.random_range(-1.0..1.0) * 10f64.powf(-1.0 + 4.0 * i as f64 / n as f64);
                    a.push((i, j, v));
                    a.push((j, i, -v));
                }
            }
            let a = CscMatrix::from_triplets(n, n, &a)?;
            let b = unit_vector(n, &mut rng);
            let c = unit_vector(n, &mut rng);
            LtiSystem::sparse(Some(e), a, b, c, 0.0)
        }
        SyntheticKind::ResonantChain => {
            let m = n / 2;
            let odd = n - 2 * m;
            // state [q; v; extra], E = diag(I, M, 1)
            let masses: Vec<f64> = (0..m).map(|_| 0.5 + rng.random::<f64>()).collect();
            let springs: Vec<f64> = (0..=m).map(|_| 0.5 + 2.0 * rng.random::<f64>()).collect();
            // Rayleigh damping alpha M + beta K
            let (alpha, beta) = (0.02, 0.02);
            let mut e = Vec::new();
            let mut a = Vec::new();
            for i in 0..m {
                let k = springs[i] + springs[i + 1];
                e.push((i, i, 1.0));
                e.push((m + i, m + i, masses[i]));
                a.push((i, m + i, 1.0));
                a.push((m + i, i, -k));
                a.push((m + i, m + i, -alpha * masses[i] - beta * k));
                if i + 1 < m {
                    a.push((m + i, i + 1, springs[i + 1]));
                    a.push((m + i + 1, i, springs[i + 1]));
                    a.push((m + i, m + i + 1, beta * springs[i + 1]));
                    a.push((m + i + 1, m + i, beta * springs[i + 1]));
                }
            }
            if odd == 1 {
                e.push((n - 1, n - 1, 1.0));
                a.push((n - 1, n - 1, -1.0));
            }
            let mut b = vec![0.0; n];
            let mut c = vec![0.0; n];
            b[m] = 1.0;
            c[1.min(m - 1)] = 1.0;
            if odd == 1 {
                b[n - 1] = 1.0;
                c[n - 1] = 0.1;
            }
            let e = CscMatrix::from_triplets(n, n, &e)?;
            let a = CscMatrix::from_triplets(n, n, &a)?;
            LtiSystem::sparse(Some(e), a, b, c, 0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sss_passes_detection() {
        let sys = make_synthetic(SyntheticKind::Sss, 10, 7).unwrap();
        assert!(sys.is_state_space_symmetric(1e-12));
        assert!(sys.is_stable(0.0).unwrap());
    }

    #[test]
    fn generic_and_chain_are_stable() {
        for kind in [SyntheticKind::Generic, SyntheticKind::ResonantChain] {
            for n in [2, 3, 10, 31] {
                let sys = make_synthetic(kind, n, 11).unwrap();
                let worst = sys.poles().unwrap().iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
                assert!(worst < 0.0, "{kind} n={n}: {worst}");
            }
        }
        assert!(!make_synthetic(SyntheticKind::Generic, 10, 1).unwrap().is_state_space_symmetric(1e-12));
    }

    #[test]
    fn same_seed_same_system() {
        let a = make_synthetic(SyntheticKind::Generic, 12, 3).unwrap();
        let b = make_synthetic(SyntheticKind::Generic, 12, 3).unwrap();
        assert_eq!(a.a().to_dense(), b.a().to_dense());
        assert_eq!(a.b(), b.b());
        assert_ne!(make_synthetic(SyntheticKind::Generic, 12, 4).unwrap().b(), a.b());
    }
}

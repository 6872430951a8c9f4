//! Numeric checks on the second-moment matrix of a k-subset sampling
//! distribution, `Λ_p = Σ_S p(S)·χ_S χ_Sᵀ`, and `ρ(p) = max_S χ_Sᵀ Λ_p⁻¹ χ_S`.

use itertools::Itertools;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;

/// Largest `n` accepted by [`rho`].
pub const RHO_MAX_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDistribution {
    pub n: usize,
    pub k: usize,
    pub support: Vec<(Vec<usize>, f64)>,
}

impl SubsetDistribution {
    pub fn new(n: usize, k: usize, support: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if k == 0 || k > n {
            return Err(invalid(format!("need 1 <= k <= n, got n={n}, k={k}")));
        }
        let mut total = 0.0;
        for (s, p) in &support {
            crate::bandit::check_subset(n, k, s)?;
            if !(*p >= 0.0) {
                return Err(invalid("probabilities must be nonnegative"));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { n, k, support })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SubsetDistribution = serde_json::from_str(s)?;
        Self::new(raw.n, raw.k, raw.support)
    }

    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        let subsets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
        let p = 1.0 / subsets.len() as f64;
        Self::new(n, k, subsets.into_iter().map(|s| (s, p)).collect())
    }

    pub fn point_mass(n: usize, subset: Vec<usize>) -> Result<Self> {
        let k = subset.len();
        Self::new(n, k, vec![(subset, 1.0)])
    }

    /// Random weights on a random sub-collection of k-subsets, redrawn until
    /// `Λ_p` is positive definite.
    pub fn random_full_rank<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        let all: Vec<Vec<usize>> = (0..n).combinations(k).collect();
        for _ in 0..1000 {
            let size = rng.random_range(n.min(all.len())..=all.len());
            let chosen = rand::seq::index::sample(rng, all.len(), size);
            let weights: Vec<f64> = (0..size).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = weights.iter().sum();
            let support = chosen.iter().zip(&weights).map(|(i, w)| (all[i].clone(), w / total)).collect();
            let d = Self::new(n, k, support)?;
            let lambda = lambda_matrix(&d);
            if lambda.sym_eigenvalues()?[0] > 1e-9 {
                return Ok(d);
            }
        }
        Err(Error::Singular)
    }
}

pub fn lambda_matrix(p: &SubsetDistribution) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(p.n, p.n);
    for (s, w) in &p.support {
        for &i in s {
            for &j in s {
                m.set(i, j, m.get(i, j) + w);
            }
        }
    }
    m
}

/// `ρ(p)` by exhaustive enumeration of all k-subsets; `+∞` when `Λ_p` is
/// singular (some direction is never observed).
pub fn rho(p: &SubsetDistribution) -> Result<f64> {
    if p.n > RHO_MAX_N {
        return Err(Error::TooLarge { n: p.n, max: RHO_MAX_N });
    }
    let lambda = lambda_matrix(p);
    if lambda.sym_eigenvalues()?[0] <= 1e-10 {
        return Ok(f64::INFINITY);
    }
    let inv = match lambda.inverse() {
        Ok(inv) => inv,
        Err(Error::Singular) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let mut best = f64::NEG_INFINITY;
    for s in (0..p.n).combinations(p.k) {
        let q: f64 = s.iter().flat_map(|&i| s.iter().map(move |&j| (i, j))).map(|(i, j)| inv.get(i, j)).sum();
        best = best.max(q);
    }
    Ok(best)
}

/// `(xᵀAx)(xᵀA⁻¹x) ≥ ‖x‖⁴` for a positive-definite `A`, up to a relative
/// slack of `1e-8`.
pub fn bilinear_check(a: &DenseMatrix, x: &[f64]) -> Result<bool> {
    let eig = a.sym_eigenvalues()?;
    if eig[0] <= 1e-10 {
        return Err(Error::NotPositiveDefinite);
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(invalid("x must be nonzero"));
    }
    let ax = a.mul_vec(x)?;
    let ainv_x = a.solve(x)?;
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let lhs = dot(x, &ax) * dot(x, &ainv_x);
    let norm2 = dot(x, x);
    Ok(lhs >= norm2 * norm2 * (1.0 - 1e-8))
}

/// Random symmetric positive-definite matrix `BᵀB + c·I` with `c ∈ [0.01, 1)`.
pub fn random_pd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseMatrix {
    let entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = DenseMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    let shift = rng.random_range(0.01..1.0);
    let mut g = b.transpose().matmul(&b).expect("square");
    for i in 0..n {
        g.set(i, i, g.get(i, i) + shift);
    }
    // Exact symmetry.
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn lambda_point_mass() {
        let d = SubsetDistribution::point_mass(3, vec![0, 1]).unwrap();
        let l = lambda_matrix(&d);
        let want = DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0; 3]]).unwrap();
        assert_eq!(l, want);
        assert_eq!(rho(&d).unwrap(), f64::INFINITY);
    }

    #[test]
    fn lambda_uniform_marginals() {
        // Marginal counting: P(i ∈ S) = k/n, P(i, j ∈ S) = k(k−1)/(n(n−1)).
        let (n, k) = (4, 2);
        let l = lambda_matrix(&SubsetDistribution::uniform(n, k).unwrap());
        let diag = k as f64 / n as f64;
        let off = (k * (k - 1)) as f64 / (n * (n - 1)) as f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { diag } else { off };
                assert!((l.get(i, j) - want).abs() < 1e-12);
            }
        }
        assert!((l.trace() - k as f64).abs() < 1e-10);
    }

    #[test]
    fn rho_uniform_exact() {
        // Λ = (1/3)I + (1/6)𝟙𝟙ᵀ for n=4, k=2, inverted by Sherman-Morrison:
        // (aI + b𝟙𝟙ᵀ)⁻¹ = (1/a)(I − b/(a + n·b) 𝟙𝟙ᵀ).
        let (a, b, n) = (1.0 / 3.0, 1.0 / 6.0, 4.0);
        let c = b / (a + n * b);
        // χ_Sᵀ Λ⁻¹ χ_S = (1/a)(k − c·k²) with k = 2.
        let want = (1.0 / a) * (2.0 - c * 4.0);
        let got = rho(&SubsetDistribution::uniform(4, 2).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!(got >= 2.0 - 1e-8);
    }

    #[test]
    fn rho_two_disjoint_pairs_is_infinite() {
        let d = SubsetDistribution::new(4, 2, vec![(vec![0, 1], 0.5), (vec![2, 3], 0.5)]).unwrap();
        // Λ = ½·blockdiag(𝟙𝟙ᵀ, 𝟙𝟙ᵀ) has rank 2.
        assert_eq!(rho(&d).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rho_size_cap() {
        let d = SubsetDistribution::point_mass(17, vec![0]).unwrap();
        assert!(matches!(rho(&d), Err(Error::TooLarge { n: 17, max: 16 })));
    }

    #[test]
    fn distribution_validation() {
        assert!(SubsetDistribution::new(4, 2, vec![(vec![0, 1], 0.7)]).is_err());
        assert!(SubsetDistribution::new(4, 2, vec![(vec![0, 0], 1.0)]).is_err());
        assert!(SubsetDistribution::new(4, 2, vec![(vec![0, 1], 1.5), (vec![2, 3], -0.5)]).is_err());
    }

    #[test]
    fn bilinear_examples() {
        assert!(bilinear_check(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap());
        let a = DenseMatrix::diagonal(&[1.0, 4.0]);
        // (1 + 4)·(1 + 1/4) = 6.25 ≥ 4
        assert!(bilinear_check(&a, &[1.0, 1.0]).unwrap());
        let indefinite = DenseMatrix::diagonal(&[1.0, -1.0]);
        assert!(matches!(bilinear_check(&indefinite, &[1.0, 1.0]), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn random_distribution_is_full_rank() {
        let mut rng = stream(2, &[]);
        let d = SubsetDistribution::random_full_rank(6, 2, &mut rng).unwrap();
        assert!(rho(&d).unwrap().is_finite());
        assert!((lambda_matrix(&d).trace() - 2.0).abs() < 1e-10);
    }
}

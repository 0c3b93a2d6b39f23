//! Distinguishability measures on truncated density matrices.

use nalgebra::{DMatrix, DVector};

use super::{hermitian_eigen, FockDensityMatrix, C64};
use crate::error::{check_unit_interval, invalid, Error, Result};

/// Eigenvalues at or below this are treated as zero in fractional powers.
const POWER_FLOOR: f64 = 1e-14;
/// Eigenvalues at or below this are outside the PGM support.
const PGM_PSEUDO_INVERSE: f64 = 1e-12;
/// Allowed deviation of the PGM completeness relation.
const PGM_COMPLETENESS: f64 = 1e-8;

fn check_same_space(a: &FockDensityMatrix, b: &FockDensityMatrix) -> Result<()> {
    if a.cutoffs() != b.cutoffs() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Cached spectral data of a pair of states for repeated overlap queries.
///
/// With `ρ₁ = U Λ U†` and `ρ₂ = V Μ V†`, the overlap is
/// `Tr ρ₁ˢ ρ₂^{1−s} = Σᵢⱼ λᵢˢ μⱼ^{1−s} |Wᵢⱼ|²` where `W = U†V`, so each
/// additional `s` costs one pass over `W`.
#[derive(Debug, Clone)]
pub struct FockOverlap {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    /// `|Wᵢⱼ|²` restricted to the kept eigenvalues.
    weights: DMatrix<f64>,
    /// `diag(√λ) W diag(√μ)` whose nuclear norm is the fidelity.
    root_product: DMatrix<C64>,
}

impl FockOverlap {
    pub fn new(a: &FockDensityMatrix, b: &FockDensityMatrix) -> Result<Self> {
        check_same_space(a, b)?;
        let (lambda, u) = support(a.data());
        let (mu, v) = support(b.data());
        let w = u.adjoint() * v;
        let weights = w.map(|z| z.norm_sqr());
        let mut root_product = w;
        for (i, l) in lambda.iter().enumerate() {
            for (j, m) in mu.iter().enumerate() {
                root_product[(i, j)] *= (l * m).sqrt();
            }
        }
        Ok(Self {
            lambda,
            mu,
            weights,
            root_product,
        })
    }

    /// `Tr ρ₁ˢ ρ₂^{1−s}` for `s ∈ [0, 1]`; the endpoints give support
    /// projector overlaps.
    pub fn overlap(&self, s: f64) -> Result<f64> {
        check_unit_interval("s", s)?;
        let ls: Vec<f64> = self
            .lambda
            .iter()
            .map(|l| if s == 0.0 { 1.0 } else { l.powf(s) })
            .collect();
        let ms: Vec<f64> = self
            .mu
            .iter()
            .map(|m| if s == 1.0 { 1.0 } else { m.powf(1.0 - s) })
            .collect();
        let mut total = 0.0;
        for (i, li) in ls.iter().enumerate() {
            for (j, mj) in ms.iter().enumerate() {
                total += li * mj * self.weights[(i, j)];
            }
        }
        Ok(total)
    }

    /// Uhlmann fidelity `Tr √(√ρ₁ ρ₂ √ρ₁)` (root convention, `F(ρ,ρ) = 1`).
    pub fn fidelity(&self) -> f64 {
        if self.root_product.is_empty() {
            return 0.0;
        }
        self.root_product.clone().singular_values().sum()
    }
}

/// Eigenpairs with eigenvalue above the floor.
fn support(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let (eigenvalues, eigenvectors) = hermitian_eigen(m);
    let keep: Vec<usize> = (0..eigenvalues.len())
        .filter(|&i| eigenvalues[i] > POWER_FLOOR)
        .collect();
    let values = keep.iter().map(|&i| eigenvalues[i]).collect();
    let vectors = eigenvectors.select_columns(keep.iter());
    (values, vectors)
}

/// `Tr ρ₁ˢ ρ₂^{1−s}`.
pub fn overlap_fock(rho1: &FockDensityMatrix, rho2: &FockDensityMatrix, s: f64) -> Result<f64> {
    FockOverlap::new(rho1, rho2)?.overlap(s)
}

/// `Tr √(√ρ₁ ρ₂ √ρ₁)`.
pub fn uhlmann_fidelity_fock(rho1: &FockDensityMatrix, rho2: &FockDensityMatrix) -> Result<f64> {
    Ok(FockOverlap::new(rho1, rho2)?.fidelity())
}

/// Minimum error probability for two hypotheses with prior `p0` on `rho0`.
pub fn helstrom_binary(rho0: &FockDensityMatrix, rho1: &FockDensityMatrix, p0: f64) -> Result<f64> {
    check_same_space(rho0, rho1)?;
    check_unit_interval("p0", p0)?;
    let gamma = rho0.data() * C64::new(p0, 0.0) - rho1.data() * C64::new(1.0 - p0, 0.0);
    let trace_norm: f64 = hermitian_eigen(&gamma).0.iter().map(|l| l.abs()).sum();
    Ok(((1.0 - trace_norm) / 2.0).clamp(0.0, 1.0))
}

/// Error probability of the pretty-good (square-root) measurement.
pub fn pgm_error(states: &[FockDensityMatrix], priors: &[f64]) -> Result<f64> {
    if states.is_empty() {
        return Err(invalid("states", "need at least one state"));
    }
    if priors.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            found: priors.len(),
        });
    }
    for st in &states[1..] {
        check_same_space(&states[0], st)?;
    }
    if priors.iter().any(|p| !(0.0..=1.0).contains(p))
        || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-12
    {
        return Err(invalid("priors", "must be a probability vector"));
    }
    let dim = states[0].dim();
    let mut avg = DMatrix::<C64>::zeros(dim, dim);
    for (st, &p) in states.iter().zip(priors) {
        avg += st.data() * C64::new(p, 0.0);
    }
    let (eigenvalues, u) = hermitian_eigen(&avg);
    let inv_sqrt = DVector::from_iterator(
        dim,
        eigenvalues.iter().map(|&l| {
            C64::new(
                if l > PGM_PSEUDO_INVERSE {
                    1.0 / l.sqrt()
                } else {
                    0.0
                },
                0.0,
            )
        }),
    );
    let proj = DVector::from_iterator(
        dim,
        eigenvalues
            .iter()
            .map(|&l| C64::new(if l > PGM_PSEUDO_INVERSE { 1.0 } else { 0.0 }, 0.0)),
    );
    let u = &u;
    let r = u * DMatrix::from_diagonal(&inv_sqrt) * u.adjoint();
    let mut completeness = -(u * DMatrix::from_diagonal(&proj) * u.adjoint());
    let mut success = 0.0;
    for (st, &p) in states.iter().zip(priors) {
        let povm = &r * st.data() * &r * C64::new(p, 0.0);
        success += p * (&povm * st.data()).trace().re;
        completeness += povm;
    }
    // Weighted by ρ̄^{1/2} on both sides: rounding in the eigendecomposition
    // is amplified by 1/λ in the raw sum, so the raw defect of a mixed
    // state with eigenvalues near the threshold says nothing about the
    // outcome probabilities, which is what the check protects.
    let sqrt_avg = DVector::from_iterator(
        dim,
        eigenvalues
            .iter()
            .map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let half = u * DMatrix::from_diagonal(&sqrt_avg) * u.adjoint();
    let defect = max_abs(&(&half * completeness * &half));
    if defect > PGM_COMPLETENESS {
        return Err(Error::Numerical(format!(
            "PGM elements miss the support projector by {defect:.3e}"
        )));
    }
    Ok((1.0 - success).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_vector, thermal_dm};

    fn fock_state(n: usize, cutoff: usize) -> FockDensityMatrix {
        let mut m = DMatrix::<C64>::zeros(cutoff, cutoff);
        m[(n, n)] = C64::new(1.0, 0.0);
        FockDensityMatrix::from_matrix(vec![cutoff], m, 0.0).unwrap()
    }

    #[test]
    fn helstrom_limits() {
        let th = thermal_dm(0.5, 10).unwrap();
        assert!((helstrom_binary(&th, &th, 0.5).unwrap() - 0.5).abs() < 1e-14);
        assert!(helstrom_binary(&fock_state(0, 4), &fock_state(1, 4), 0.5).unwrap() < 1e-14);
    }

    #[test]
    fn helstrom_pure_pair() {
        let a = coherent_vector(C64::new(0.4, 0.0), 30)
            .unwrap()
            .to_density();
        let b = coherent_vector(C64::new(-0.3, 0.2), 30)
            .unwrap()
            .to_density();
        let zeta = uhlmann_fidelity_fock(&a, &b).unwrap();
        let expected = (1.0 - (1.0 - zeta * zeta).sqrt()) / 2.0;
        assert!((helstrom_binary(&a, &b, 0.5).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn helstrom_prior_swap_symmetry() {
        let a = thermal_dm(0.2, 12).unwrap();
        let b = coherent_vector(C64::new(0.5, 0.1), 12)
            .unwrap()
            .to_density();
        let x = helstrom_binary(&a, &b, 0.3).unwrap();
        let y = helstrom_binary(&b, &a, 0.7).unwrap();
        assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn pgm_limits() {
        let orth = [fock_state(0, 3), fock_state(1, 3), fock_state(2, 3)];
        assert!(pgm_error(&orth, &[1.0 / 3.0; 3]).unwrap() < 1e-12);
        let th = thermal_dm(0.4, 8).unwrap();
        let same = vec![th.clone(), th.clone(), th.clone(), th];
        assert!((pgm_error(&same, &[0.25; 4]).unwrap() - 0.75).abs() < 1e-10);
        assert!(pgm_error(&orth, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn pgm_not_better_than_helstrom() {
        let a = thermal_dm(0.3, 15).unwrap();
        let b = coherent_vector(C64::new(0.7, 0.0), 15)
            .unwrap()
            .to_density();
        let pgm = pgm_error(&[a.clone(), b.clone()], &[0.5, 0.5]).unwrap();
        assert!(pgm >= helstrom_binary(&a, &b, 0.5).unwrap() - 1e-12);
    }

    #[test]
    fn overlaps() {
        let vac = thermal_dm(0.0, 60).unwrap();
        let th = thermal_dm(1.0, 60).unwrap();
        assert!((overlap_fock(&vac, &th, 0.5).unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((overlap_fock(&th, &th, 0.3).unwrap() - 1.0).abs() < 1e-10);
        // endpoints are support overlaps: vacuum projector against thermal
        assert!((overlap_fock(&vac, &th, 0.0).unwrap() - 0.5).abs() < 1e-9);
        assert!((overlap_fock(&vac, &th, 1.0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coherent_fidelity() {
        let (alpha, beta) = (C64::new(0.6, -0.2), C64::new(-0.1, 0.5));
        let a = coherent_vector(alpha, 30).unwrap().to_density();
        let b = coherent_vector(beta, 30).unwrap().to_density();
        let expected = (-(alpha - beta).norm_sqr() / 2.0).exp();
        assert!((uhlmann_fidelity_fock(&a, &b).unwrap() - expected).abs() < 1e-10);
        assert!((uhlmann_fidelity_fock(&a, &a).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn vacuum_thermal_fidelity() {
        let vac = thermal_dm(0.0, 60).unwrap();
        let th = thermal_dm(1.0, 60).unwrap();
        assert!((uhlmann_fidelity_fock(&vac, &th).unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn mismatched_spaces() {
        let a = thermal_dm(0.1, 4).unwrap();
        let b = thermal_dm(0.1, 5).unwrap();
        assert!(overlap_fock(&a, &b, 0.5).is_err());
        assert!(helstrom_binary(&a, &b, 0.5).is_err());
    }
}

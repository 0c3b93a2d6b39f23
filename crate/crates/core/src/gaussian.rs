//! Gaussian states in the covariance-matrix picture.
//!
//! A state of `n` bosonic modes is a mean vector of length `2n` and a real
//! symmetric `2n × 2n` covariance matrix with quadratures interleaved as
//! `(x₁, p₁, …, xₙ, pₙ)`. Units are chosen so that the vacuum covariance is
//! the identity (`x = a + a†`); a thermal state of mean photon number `N`
//! then has covariance `(2N + 1)·I`.
//!
//! Every transformation acts as `μ → S μ`, `V → S V Sᵀ (+ noise)` where `S`
//! is the Heisenberg-picture action on the quadrature vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_at_least, check_unit_interval, invalid, Error, Result};

/// Symplectic eigenvalues below one by less than this are clipped to one.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// The standard symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let dim = 2 * self.n_modes;
        let mut omega = DMatrix::zeros(dim, dim);
        for k in 0..self.n_modes {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        omega
    }

    /// Largest entry of `|S Ω Sᵀ − Ω|`.
    pub fn symplectic_defect(&self, s: &DMatrix<f64>) -> f64 {
        let omega = self.matrix();
        (s * &omega * s.transpose() - omega).amax()
    }
}

/// An `n`-mode bosonic Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from a mean vector and covariance matrix.
    ///
    /// The covariance is symmetrized; the result must satisfy the
    /// uncertainty principle (all symplectic eigenvalues ≥ 1 − 1e-9).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::from_parts(mean, cov)?;
        state.check_physical()?;
        Ok(state)
    }

    fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: cov.ncols(),
            });
        }
        if cov.nrows() == 0 || cov.nrows() % 2 == 1 {
            return Err(invalid(
                "cov",
                format!("dimension {} is not 2n with n > 0", cov.nrows()),
            ));
        }
        if mean.len() != cov.nrows() {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows(),
                found: mean.len(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("cov", "non-finite entry"));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self {
            n_modes: mean.len() / 2,
            mean,
            cov,
        })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        thermal_state(0.0, n_modes)
    }

    /// Single-mode coherent state `|α⟩` with `α = re + i·im`.
    pub fn coherent(re: f64, im: f64) -> Result<Self> {
        let mean = DVector::from_vec(vec![2.0 * re, 2.0 * im]);
        Self::new(mean, DMatrix::identity(2, 2))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn is_zero_mean(&self) -> bool {
        self.mean.iter().all(|&v| v == 0.0)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::ModeOutOfRange {
                index: mode,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }

    fn check_physical(&self) -> Result<()> {
        let nu = symplectic_spectrum(&self.cov)?;
        match nu.last() {
            Some(&min) if min < 1.0 - PHYSICALITY_TOLERANCE => Err(Error::Unphysical { nu: min }),
            _ => Ok(()),
        }
    }

    /// Applies a Heisenberg-picture symplectic matrix to the whole state.
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<Self> {
        let dim = 2 * self.n_modes;
        if s.nrows() != dim || s.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.nrows(),
            });
        }
        Self::from_parts(s * &self.mean, s * &self.cov * s.transpose())
    }

    /// Tensor product `self ⊗ other` (modes of `other` appended).
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (a, b) = (2 * self.n_modes, 2 * other.n_modes);
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        GaussianState {
            n_modes: self.n_modes + other.n_modes,
            mean,
            cov,
        }
    }

    /// Reduced state on the listed modes, in the listed order.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return Err(invalid("modes", "empty mode list"));
        }
        for &m in modes {
            self.check_mode(m)?;
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.cov[(idx[r], idx[c])]);
        Ok(GaussianState {
            n_modes: modes.len(),
            mean,
            cov,
        })
    }

    /// Relabels modes: mode `k` of the result is mode `order[k]` of `self`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                found: order.len(),
            });
        }
        let mut seen = vec![false; self.n_modes];
        for &m in order {
            self.check_mode(m)?;
            if std::mem::replace(&mut seen[m], true) {
                return Err(invalid("order", "not a permutation"));
            }
        }
        self.reduced(order)
    }

    /// Displaces one mode by `α = re + i·im`.
    pub fn displace(&self, mode: usize, re: f64, im: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += 2.0 * re;
        out.mean[2 * mode + 1] += 2.0 * im;
        Ok(out)
    }

    /// Thermal-loss channel `a → √κ a + √(1−κ) e` on one mode, with the
    /// environment `e` thermal at `N_B/(1−κ)` photons so that `N_B` noise
    /// photons reach the output.
    pub fn apply_thermal_loss(&self, mode: usize, kappa: f64, n_b: f64) -> Result<Self> {
        self.check_mode(mode)?;
        check_unit_interval("kappa", kappa)?;
        check_at_least("n_b", n_b, 0.0)?;
        if kappa == 1.0 && n_b > 0.0 {
            return Err(invalid(
                "kappa",
                "kappa = 1 cannot inject N_B > 0 noise photons",
            ));
        }
        let dim = 2 * self.n_modes;
        let mut scale = DMatrix::<f64>::identity(dim, dim);
        let t = kappa.sqrt();
        scale[(2 * mode, 2 * mode)] = t;
        scale[(2 * mode + 1, 2 * mode + 1)] = t;
        let mut out = Self::from_parts(&scale * &self.mean, &scale * &self.cov * &scale)?;
        let added = 2.0 * n_b + 1.0 - kappa;
        out.cov[(2 * mode, 2 * mode)] += added;
        out.cov[(2 * mode + 1, 2 * mode + 1)] += added;
        Ok(out)
    }

    /// Two-mode squeezer `a_i → √G a_i + √(G−1) a_j†` (and `i ↔ j`).
    pub fn two_mode_squeeze(&self, i: usize, j: usize, gain: f64) -> Result<Self> {
        self.check_pair(i, j)?;
        self.transform(&two_mode_squeezer_matrix(self.n_modes, i, j, gain)?)
    }

    /// Beamsplitter `a_i → √τ a_i + √(1−τ) a_j`, `a_j → −√(1−τ) a_i + √τ a_j`.
    pub fn beamsplitter(&self, i: usize, j: usize, tau: f64) -> Result<Self> {
        self.check_pair(i, j)?;
        self.transform(&beamsplitter_matrix(self.n_modes, i, j, tau)?)
    }

    /// Phase rotation `a → e^{iθ} a` of one mode.
    pub fn phase_shift(&self, mode: usize, theta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        self.transform(&phase_shift_matrix(self.n_modes, mode, theta)?)
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(invalid("modes", "two-mode operation needs distinct modes"));
        }
        Ok(())
    }

    /// Symplectic eigenvalues, descending, clipped to 1 within tolerance.
    pub fn williamson_eigenvalues(&self) -> Result<Vec<f64>> {
        let nu = symplectic_spectrum(&self.cov)?;
        Ok(nu
            .into_iter()
            .map(|v| {
                if (1.0 - PHYSICALITY_TOLERANCE..1.0).contains(&v) {
                    1.0
                } else {
                    v
                }
            })
            .collect())
    }

    /// `⟨a†a⟩` of one mode.
    pub fn mean_photon(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let (x, p) = (2 * mode, 2 * mode + 1);
        let v = (self.cov[(x, x)] + self.cov[(p, p)] - 2.0) / 4.0;
        let d = (self.mean[x].powi(2) + self.mean[p].powi(2)) / 4.0;
        Ok(v + d)
    }
}

/// Thermal state with `n` photons per mode on `n_modes` modes.
pub fn thermal_state(n: f64, n_modes: usize) -> Result<GaussianState> {
    check_at_least("n", n, 0.0)?;
    if n_modes == 0 {
        return Err(invalid("n_modes", "must be positive"));
    }
    let dim = 2 * n_modes;
    GaussianState::new(
        DVector::zeros(dim),
        DMatrix::identity(dim, dim) * (2.0 * n + 1.0),
    )
}

/// Two-mode squeezed vacuum with `n_s` photons per arm (signal = mode 0,
/// idler = mode 1).
pub fn tmsv(n_s: f64) -> Result<GaussianState> {
    check_at_least("n_s", n_s, 0.0)?;
    let c_p = (n_s * (n_s + 1.0)).sqrt();
    GaussianState::new(
        DVector::zeros(4),
        two_mode_block(2.0 * n_s + 1.0, 2.0 * n_s + 1.0, 2.0 * c_p),
    )
}

/// `[[a·I₂, c·Z₂], [c·Z₂, b·I₂]]`, the standard form of a two-mode
/// phase-sensitive correlated state.
pub fn two_mode_block(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(4, 4);
    v[(0, 0)] = a;
    v[(1, 1)] = a;
    v[(2, 2)] = b;
    v[(3, 3)] = b;
    v[(0, 2)] = c;
    v[(2, 0)] = c;
    v[(1, 3)] = -c;
    v[(3, 1)] = -c;
    v
}

fn check_indices(n_modes: usize, modes: &[usize]) -> Result<()> {
    for &m in modes {
        if m >= n_modes {
            return Err(Error::ModeOutOfRange { index: m, n_modes });
        }
    }
    if modes.len() == 2 && modes[0] == modes[1] {
        return Err(invalid("modes", "two-mode operation needs distinct modes"));
    }
    Ok(())
}

pub fn two_mode_squeezer_matrix(
    n_modes: usize,
    i: usize,
    j: usize,
    gain: f64,
) -> Result<DMatrix<f64>> {
    check_indices(n_modes, &[i, j])?;
    check_at_least("gain", gain, 1.0)?;
    let (c, s) = (gain.sqrt(), (gain - 1.0).sqrt());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for (a, b) in [(i, j), (j, i)] {
        m[(2 * a, 2 * a)] = c;
        m[(2 * a + 1, 2 * a + 1)] = c;
        m[(2 * a, 2 * b)] = s;
        m[(2 * a + 1, 2 * b + 1)] = -s;
    }
    Ok(m)
}

pub fn beamsplitter_matrix(n_modes: usize, i: usize, j: usize, tau: f64) -> Result<DMatrix<f64>> {
    check_indices(n_modes, &[i, j])?;
    check_unit_interval("tau", tau)?;
    let (t, r) = (tau.sqrt(), (1.0 - tau).sqrt());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        m[(2 * i + q, 2 * i + q)] = t;
        m[(2 * i + q, 2 * j + q)] = r;
        m[(2 * j + q, 2 * i + q)] = -r;
        m[(2 * j + q, 2 * j + q)] = t;
    }
    Ok(m)
}

pub fn phase_shift_matrix(n_modes: usize, mode: usize, theta: f64) -> Result<DMatrix<f64>> {
    check_indices(n_modes, &[mode])?;
    if !theta.is_finite() {
        return Err(invalid("theta", "must be finite"));
    }
    let (c, s) = (theta.cos(), theta.sin());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    m[(2 * mode, 2 * mode)] = c;
    m[(2 * mode, 2 * mode + 1)] = -s;
    m[(2 * mode + 1, 2 * mode)] = s;
    m[(2 * mode + 1, 2 * mode + 1)] = c;
    Ok(m)
}

/// Symmetric square root and inverse square root of a positive-definite
/// matrix.
pub(crate) fn sqrt_and_inv_sqrt(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        return Err(Error::Unphysical { nu: min });
    }
    let u = &eig.eigenvectors;
    let root = u * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * u.transpose();
    let inv_root =
        u * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * u.transpose();
    Ok((root, inv_root))
}

/// Moduli of the eigenvalues of `iΩV`, one per mode, descending (no
/// clipping).
///
/// Computed from the singular values of the antisymmetric matrix
/// `V^{1/2} Ω V^{1/2}`, which come in equal pairs.
pub fn symplectic_spectrum(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    if cov.nrows() != cov.ncols() || cov.nrows() % 2 == 1 {
        return Err(invalid("cov", "must be a square 2n × 2n matrix"));
    }
    let asymmetry = (cov - cov.transpose()).amax();
    if asymmetry > SYMMETRY_TOLERANCE * cov.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let n = cov.nrows() / 2;
    let (root, _) = sqrt_and_inv_sqrt(cov)?;
    let k = &root * SymplecticForm::new(n).matrix() * &root;
    let gram = k.transpose() * &k;
    let gram = (&gram + gram.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn thermal_covariances() {
        let vac = thermal_state(0.0, 1).unwrap();
        assert!(close(vac.cov(), &DMatrix::identity(2, 2), 0.0));
        let th = thermal_state(3.0, 1).unwrap();
        assert!(close(th.cov(), &(DMatrix::identity(2, 2) * 7.0), 0.0));
        let two = thermal_state(1.0, 2).unwrap();
        assert!(close(two.cov(), &(DMatrix::identity(4, 4) * 3.0), 0.0));
        assert!(thermal_state(-0.1, 1).is_err());
    }

    #[test]
    fn tmsv_entries_and_purity() {
        assert!(close(
            tmsv(0.0).unwrap().cov(),
            &DMatrix::identity(4, 4),
            0.0
        ));
        let s = tmsv(0.001).unwrap();
        assert!((s.cov()[(0, 2)] - 0.0632772).abs() < 1e-7);
        assert!((s.cov()[(1, 3)] + 0.0632772).abs() < 1e-7);
        for n_s in [0.0, 1e-3, 0.5, 7.0] {
            let nu = tmsv(n_s).unwrap().williamson_eigenvalues().unwrap();
            assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-9), "{nu:?}");
        }
        assert!(tmsv(-1.0).is_err());
    }

    #[test]
    fn tmsv_marginal_is_thermal() {
        let n_s = 0.37;
        let marginal = tmsv(n_s).unwrap().reduced(&[1]).unwrap();
        assert_eq!(marginal.cov(), thermal_state(n_s, 1).unwrap().cov());
    }

    #[test]
    fn thermal_loss_examples() {
        let s = tmsv(0.3).unwrap();
        assert_eq!(s.apply_thermal_loss(0, 1.0, 0.0).unwrap(), s);

        let vac = GaussianState::vacuum(1).unwrap();
        let out = vac.apply_thermal_loss(0, 0.5, 3.0).unwrap();
        assert!(close(out.cov(), &(DMatrix::identity(2, 2) * 7.0), 1e-14));

        let out = tmsv(0.001)
            .unwrap()
            .apply_thermal_loss(0, 0.01, 3.0)
            .unwrap();
        assert!((out.cov()[(0, 2)] - 0.00632772).abs() < 1e-8);
        assert!((out.cov()[(0, 0)] - 7.00002).abs() < 1e-12);
        assert!((out.cov()[(2, 2)] - 1.002).abs() < 1e-12);

        assert!(vac.apply_thermal_loss(0, 1.0, 0.1).is_err());
        assert!(vac.apply_thermal_loss(0, 1.2, 0.0).is_err());
        assert!(vac.apply_thermal_loss(1, 0.5, 0.0).is_err());
    }

    #[test]
    fn thermal_loss_moves_mean_photons() {
        let coh = GaussianState::coherent(1.5, -0.5).unwrap();
        let out = coh.apply_thermal_loss(0, 0.3, 0.2).unwrap();
        let expected = 0.3 * coh.mean_photon(0).unwrap() + 0.2;
        assert!((out.mean_photon(0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn squeezer_on_vacuum_is_tmsv() {
        let g = 1.7;
        let out = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, g)
            .unwrap();
        assert!(close(out.cov(), tmsv(g - 1.0).unwrap().cov(), 1e-12));
        assert!((out.mean_photon(0).unwrap() - (g - 1.0)).abs() < 1e-12);
        let nu = out.williamson_eigenvalues().unwrap();
        assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-9));
        let same = tmsv(0.2).unwrap().two_mode_squeeze(0, 1, 1.0).unwrap();
        assert!(close(same.cov(), tmsv(0.2).unwrap().cov(), 1e-15));
        assert!(out.two_mode_squeeze(0, 1, 0.9).is_err());
        assert!(out.two_mode_squeeze(1, 1, 1.1).is_err());
    }

    #[test]
    fn beamsplitter_examples() {
        let th = thermal_state(0.8, 2).unwrap();
        let out = th.beamsplitter(0, 1, 0.37).unwrap();
        assert!(close(out.cov(), th.cov(), 1e-14));

        let alpha = 0.9;
        let st = GaussianState::coherent(alpha, 0.0)
            .unwrap()
            .tensor(&GaussianState::vacuum(1).unwrap());
        let out = st.beamsplitter(0, 1, 0.5).unwrap();
        let r2 = 2f64.sqrt() * alpha;
        let expected = [r2, 0.0, -r2, 0.0];
        for (k, e) in expected.iter().enumerate() {
            assert!((out.mean()[k] - e).abs() < 1e-14);
        }
        assert_eq!(st.beamsplitter(0, 1, 1.0).unwrap(), st);
        assert!(st.beamsplitter(0, 1, 1.5).is_err());
    }

    #[test]
    fn phase_shift_examples() {
        let s = GaussianState::coherent(0.4, 0.2).unwrap();
        assert_eq!(s.phase_shift(0, 0.0).unwrap(), s);
        let full = s.phase_shift(0, 2.0 * std::f64::consts::PI).unwrap();
        assert!((full.mean() - s.mean()).amax() < 1e-12);
        let th = thermal_state(2.0, 1).unwrap();
        assert!(close(
            th.phase_shift(0, 1.234).unwrap().cov(),
            th.cov(),
            1e-13
        ));
    }

    #[test]
    fn williamson_examples() {
        let nu = thermal_state(2.5, 1)
            .unwrap()
            .williamson_eigenvalues()
            .unwrap();
        assert!(nu.len() == 1 && (nu[0] - 6.0).abs() < 1e-12);
        let mut bad = DMatrix::identity(2, 2);
        bad[(0, 1)] = 0.5;
        assert!(matches!(
            symplectic_spectrum(&bad),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.5),
            Err(Error::Unphysical { .. })
        ));
    }

    #[test]
    fn mean_photon_examples() {
        assert_eq!(
            GaussianState::vacuum(1).unwrap().mean_photon(0).unwrap(),
            0.0
        );
        assert!((thermal_state(1.3, 1).unwrap().mean_photon(0).unwrap() - 1.3).abs() < 1e-15);
        let coh =
            GaussianState::new(DVector::from_vec(vec![2.0, 0.0]), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(coh.mean_photon(0).unwrap(), 1.0);
    }

    #[test]
    fn symplectic_form_identities() {
        let omega = SymplecticForm::new(3).matrix();
        assert_eq!(omega.transpose(), -&omega);
        assert_eq!(&omega * &omega, -DMatrix::identity(6, 6));
    }

    proptest! {
        #[test]
        fn symplectic_matrices_preserve_form(g in 1.0f64..5.0, tau in 0.0f64..1.0, theta in -7.0f64..7.0) {
            let form = SymplecticForm::new(3);
            prop_assert!(form.symplectic_defect(&two_mode_squeezer_matrix(3, 0, 2, g).unwrap()) < 1e-10);
            prop_assert!(form.symplectic_defect(&beamsplitter_matrix(3, 2, 1, tau).unwrap()) < 1e-10);
            prop_assert!(form.symplectic_defect(&phase_shift_matrix(3, 1, theta).unwrap()) < 1e-10);
        }

        #[test]
        fn pure_loss_composes(k1 in 0.0f64..1.0, k2 in 0.0f64..1.0, n in 0.0f64..3.0) {
            let s = tmsv(n).unwrap();
            let two = s.apply_thermal_loss(0, k1, 0.0).unwrap().apply_thermal_loss(0, k2, 0.0).unwrap();
            let one = s.apply_thermal_loss(0, k1 * k2, 0.0).unwrap();
            prop_assert!(close(two.cov(), one.cov(), 1e-12));
        }

        #[test]
        fn operations_stay_physical(
            n1 in 0.0f64..2.0, n2 in 0.0f64..2.0, g in 1.0f64..3.0,
            tau in 0.0f64..1.0, theta in 0.0f64..6.3, kappa in 0.0f64..0.99, nb in 0.0f64..2.0,
        ) {
            let st = thermal_state(n1, 1).unwrap().tensor(&thermal_state(n2, 1).unwrap())
                .two_mode_squeeze(0, 1, g).unwrap()
                .phase_shift(1, theta).unwrap()
                .beamsplitter(0, 1, tau).unwrap()
                .apply_thermal_loss(0, kappa, nb).unwrap();
            let nu = st.williamson_eigenvalues().unwrap();
            prop_assert!(nu.iter().all(|&v| v >= 1.0 - 1e-9));
        }
    }
}

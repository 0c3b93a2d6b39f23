//! Gaussian unitaries on the truncated Fock space.
//!
//! Each unitary is the exponential of a quadratic (or linear) generator
//! built from ladder operators. Conserved quantities are used to keep the
//! exponentials exact or cheaply padded:
//!
//! - beamsplitter: total photon number, so each sector `n_i + n_j = N` is
//!   finite and exponentiated exactly;
//! - two-mode squeezer: the difference `n_i − n_j`, so each sector is a
//!   semi-infinite chain truncated well beyond the cutoff;
//! - displacement: a single mode padded beyond the cutoff;
//! - phase: diagonal.
//!
//! The local operator returned is `P U P`, the projection of the (nearly)
//! exact unitary onto the kept levels; applying it to a state already inside
//! the cutoff gives `P U ρ U† P`, and the lost trace is recorded.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{thermal_dm, FockDensityMatrix, C64};
use crate::error::{check_at_least, check_unit_interval, invalid, Error, Result};

/// Extra levels used for generators that do not conserve photon number.
const PAD_LEVELS: usize = 40;

/// A Gaussian unitary and its Heisenberg action on the listed modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// `a_i → √τ a_i + √(1−τ) a_j`, `a_j → −√(1−τ) a_i + √τ a_j`.
    Beamsplitter { tau: f64 },
    /// `a_i → √G a_i + √(G−1) a_j†`.
    Squeezer { gain: f64 },
    /// `a → e^{iθ} a`.
    Phase { theta: f64 },
    /// `a → a + α`.
    Displacement { alpha: C64 },
}

impl Generator {
    fn arity(&self) -> usize {
        match self {
            Generator::Beamsplitter { .. } | Generator::Squeezer { .. } => 2,
            Generator::Phase { .. } | Generator::Displacement { .. } => 1,
        }
    }
}

/// `exp(−iH)` for Hermitian `H`.
fn expm_hermitian(h: DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h);
    let u = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|l| C64::new(0.0, -l).exp());
    u * DMatrix::from_diagonal(&phases) * u.adjoint()
}

/// Local operator `P U P` over the kept levels of the listed modes, in
/// row-major order of `(n_i, n_j)`.
fn local_operator(gen: Generator, cutoffs: &[usize]) -> Result<DMatrix<C64>> {
    match gen {
        Generator::Phase { theta } => {
            if !theta.is_finite() {
                return Err(invalid("theta", "must be finite"));
            }
            let c = cutoffs[0];
            Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_fn(
                c,
                |n, _| C64::new(0.0, theta * n as f64).exp(),
            )))
        }
        Generator::Displacement { alpha } => {
            if !alpha.re.is_finite() || !alpha.im.is_finite() {
                return Err(invalid("alpha", "must be finite"));
            }
            let c = cutoffs[0];
            let l = c + PAD_LEVELS.max(c);
            // α a† − α* a = −iH with H = i(α a† − α* a)
            let mut h = DMatrix::<C64>::zeros(l, l);
            for n in 0..l - 1 {
                let amp = ((n + 1) as f64).sqrt();
                h[(n + 1, n)] = C64::new(0.0, 1.0) * alpha * amp;
                h[(n, n + 1)] = C64::new(0.0, -1.0) * alpha.conj() * amp;
            }
            Ok(expm_hermitian(h).view((0, 0), (c, c)).into_owned())
        }
        Generator::Beamsplitter { tau } => {
            check_unit_interval("tau", tau)?;
            let theta = tau.sqrt().acos();
            let (ci, cj) = (cutoffs[0], cutoffs[1]);
            let mut op = DMatrix::<C64>::zeros(ci * cj, ci * cj);
            for total in 0..(ci + cj - 1) {
                // sector basis |k, total−k⟩, k = 0..=total
                let len = total + 1;
                // A = θ(a_i† a_j − a_i a_j†) = −iH
                let mut h = DMatrix::<C64>::zeros(len, len);
                for k in 0..total {
                    let amp = theta * (((k + 1) * (total - k)) as f64).sqrt();
                    h[(k + 1, k)] = C64::new(0.0, amp);
                    h[(k, k + 1)] = C64::new(0.0, -amp);
                }
                let u = expm_hermitian(h);
                for kin in 0..len {
                    if kin >= ci || total - kin >= cj {
                        continue;
                    }
                    for kout in 0..len {
                        if kout >= ci || total - kout >= cj {
                            continue;
                        }
                        op[(kout * cj + (total - kout), kin * cj + (total - kin))] = u[(kout, kin)];
                    }
                }
            }
            Ok(op)
        }
        Generator::Squeezer { gain } => {
            check_at_least("gain", gain, 1.0)?;
            let r = gain.sqrt().acosh();
            let (ci, cj) = (cutoffs[0], cutoffs[1]);
            let mut op = DMatrix::<C64>::zeros(ci * cj, ci * cj);
            let (ci_i, cj_i) = (ci as isize, cj as isize);
            for diff in -(cj_i - 1)..ci_i {
                // sector basis |k0+diff+t, k0+t⟩
                let k0 = (-diff).max(0) as usize;
                let start_i = (k0 as isize + diff) as usize;
                let kept = (ci - start_i).min(cj - k0);
                let len = kept + PAD_LEVELS.max(kept);
                // A = r(a_i† a_j† − a_i a_j) = −iH
                let mut h = DMatrix::<C64>::zeros(len, len);
                for t in 0..len - 1 {
                    let amp = r * (((start_i + t + 1) * (k0 + t + 1)) as f64).sqrt();
                    h[(t + 1, t)] = C64::new(0.0, amp);
                    h[(t, t + 1)] = C64::new(0.0, -amp);
                }
                let u = expm_hermitian(h);
                for tin in 0..kept {
                    for tout in 0..kept {
                        let row = (start_i + tout) * cj + k0 + tout;
                        let col = (start_i + tin) * cj + k0 + tin;
                        op[(row, col)] = u[(tout, tin)];
                    }
                }
            }
            Ok(op)
        }
    }
}

/// Full-space indices grouped by the state of the untouched modes:
/// `groups[r][l]` is the full index with local index `l` on `modes`.
fn local_groups(cutoffs: &[usize], modes: &[usize]) -> Vec<Vec<usize>> {
    let n = cutoffs.len();
    let dim: usize = cutoffs.iter().product();
    let local_dim: usize = modes.iter().map(|&m| cutoffs[m]).product();
    let rest: Vec<usize> = (0..n).filter(|m| !modes.contains(m)).collect();
    let rest_dim: usize = rest.iter().map(|&m| cutoffs[m]).product();
    let mut groups = vec![vec![0usize; local_dim]; rest_dim];
    let mut digits = vec![0usize; n];
    for full in 0..dim {
        let mut x = full;
        for m in (0..n).rev() {
            digits[m] = x % cutoffs[m];
            x /= cutoffs[m];
        }
        let l = modes.iter().fold(0, |acc, &m| acc * cutoffs[m] + digits[m]);
        let r = rest.iter().fold(0, |acc, &m| acc * cutoffs[m] + digits[m]);
        groups[r][l] = full;
    }
    groups
}

/// Nonzero entries `(row, col, value)` of a local operator; the sector
/// structure of the two-mode generators makes them block-sparse.
fn nonzeros(op: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for c in 0..op.ncols() {
        for r in 0..op.nrows() {
            let v = op[(r, c)];
            if v != C64::new(0.0, 0.0) {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// `(op ⊗ I) · m` for an operator acting on a subset of modes.
fn left_apply(op: &[(usize, usize, C64)], groups: &[Vec<usize>], m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        let src = m.column(j);
        let mut dst = out.column_mut(j);
        for g in groups {
            for &(r, c, v) in op {
                dst[g[r]] += v * src[g[c]];
            }
        }
    }
    out
}

/// Conjugates `dm` by the unitary of `gen` acting on `modes`.
pub fn apply_gaussian_unitary(
    dm: &FockDensityMatrix,
    gen: Generator,
    modes: &[usize],
) -> Result<FockDensityMatrix> {
    if modes.len() != gen.arity() {
        return Err(invalid(
            "modes",
            format!("{gen:?} acts on {} mode(s)", gen.arity()),
        ));
    }
    for &m in modes {
        if m >= dm.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: m,
                n_modes: dm.n_modes(),
            });
        }
    }
    if modes.len() == 2 && modes[0] == modes[1] {
        return Err(invalid("modes", "two-mode unitary needs distinct modes"));
    }
    let local_cutoffs: Vec<usize> = modes.iter().map(|&m| dm.cutoffs[m]).collect();
    let op = nonzeros(&local_operator(gen, &local_cutoffs)?);
    let groups = local_groups(&dm.cutoffs, modes);
    let half = left_apply(&op, &groups, &dm.data);
    let data = left_apply(&op, &groups, &half.adjoint());
    let mut out = FockDensityMatrix {
        cutoffs: dm.cutoffs.clone(),
        data,
        trace_deficit: dm.trace_deficit,
    };
    out.data = (&out.data + out.data.adjoint()) * C64::new(0.5, 0.0);
    let lost = (1.0 - out.trace()).max(0.0);
    out.renormalize(lost)?;
    Ok(out)
}

/// Thermal-loss channel on one mode: a thermal ancilla with
/// `N_B/(1−κ)` photons is mixed in on a beamsplitter of transmissivity
/// `κ` and traced out.
pub fn thermal_loss_fock(
    dm: &FockDensityMatrix,
    mode: usize,
    kappa: f64,
    n_b: f64,
    ancilla_cutoff: usize,
) -> Result<FockDensityMatrix> {
    check_unit_interval("kappa", kappa)?;
    check_at_least("n_b", n_b, 0.0)?;
    if mode >= dm.n_modes() {
        return Err(Error::ModeOutOfRange {
            index: mode,
            n_modes: dm.n_modes(),
        });
    }
    if kappa == 1.0 {
        if n_b > 0.0 {
            return Err(invalid(
                "kappa",
                "kappa = 1 cannot inject N_B > 0 noise photons",
            ));
        }
        return Ok(dm.clone());
    }
    let ancilla = thermal_dm(n_b / (1.0 - kappa), ancilla_cutoff)?;
    let joint = dm.tensor(&ancilla);
    let anc = joint.n_modes() - 1;
    let mixed =
        apply_gaussian_unitary(&joint, Generator::Beamsplitter { tau: kappa }, &[mode, anc])?;
    mixed.partial_trace(anc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_vector, tmsv_vector};

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn vacuum2(c: usize) -> FockDensityMatrix {
        thermal_dm(0.0, c)
            .unwrap()
            .tensor(&thermal_dm(0.0, c).unwrap())
    }

    #[test]
    fn unit_transmissivity_is_identity() {
        let st = coherent_vector(C64::new(0.6, 0.1), 12)
            .unwrap()
            .to_density()
            .tensor(&thermal_dm(0.4, 12).unwrap());
        let out =
            apply_gaussian_unitary(&st, Generator::Beamsplitter { tau: 1.0 }, &[0, 1]).unwrap();
        assert!(max_diff(out.data(), st.data()) < 1e-14);
    }

    #[test]
    fn squeezed_vacuum_matches_tmsv() {
        let g = 1.3;
        let c = 40;
        let out =
            apply_gaussian_unitary(&vacuum2(c), Generator::Squeezer { gain: g }, &[0, 1]).unwrap();
        let reference = tmsv_vector(g - 1.0, c).unwrap().to_density();
        assert!(out.trace_deficit() < 1e-10);
        assert!(max_diff(out.data(), reference.data()) < 1e-8);
    }

    #[test]
    fn beamsplitter_conserves_photons() {
        let st = coherent_vector(C64::new(0.9, 0.0), 20)
            .unwrap()
            .to_density()
            .tensor(&thermal_dm(0.3, 20).unwrap());
        let before = st.mean_photon(0).unwrap() + st.mean_photon(1).unwrap();
        let out =
            apply_gaussian_unitary(&st, Generator::Beamsplitter { tau: 0.37 }, &[0, 1]).unwrap();
        let after = out.mean_photon(0).unwrap() + out.mean_photon(1).unwrap();
        assert!((before - after).abs() < 1e-10);
        // coherent amplitude splits as √τ α on mode 0
        let expected0 = 0.37 * 0.81 + 0.63 * 0.3;
        assert!((out.mean_photon(0).unwrap() - expected0).abs() < 1e-9);
    }

    #[test]
    fn phase_and_displacement_compose() {
        let alpha = C64::new(0.5, 0.0);
        let theta = 0.7;
        let st = coherent_vector(alpha, 25).unwrap().to_density();
        let rotated = apply_gaussian_unitary(&st, Generator::Phase { theta }, &[0]).unwrap();
        let expected = coherent_vector(alpha * C64::new(0.0, theta).exp(), 25)
            .unwrap()
            .to_density();
        assert!(max_diff(rotated.data(), expected.data()) < 1e-12);
    }

    #[test]
    fn pure_loss_on_coherent_state() {
        let alpha = C64::new(0.8, -0.3);
        let st = coherent_vector(alpha, 25).unwrap().to_density();
        let out = thermal_loss_fock(&st, 0, 0.4, 0.0, 2).unwrap();
        let expected = coherent_vector(alpha * 0.4f64.sqrt(), 25)
            .unwrap()
            .to_density();
        assert!(max_diff(out.data(), expected.data()) < 1e-10);
        assert_eq!(
            thermal_loss_fock(&st, 0, 1.0, 0.0, 2).unwrap().data(),
            st.data()
        );
        assert!(thermal_loss_fock(&st, 0, 1.0, 0.2, 2).is_err());
    }

    #[test]
    fn thermal_loss_moments() {
        let alpha = C64::new(0.6, 0.2);
        let st = coherent_vector(alpha, 30).unwrap().to_density();
        let (kappa, n_b) = (0.3, 0.25);
        let out = thermal_loss_fock(&st, 0, kappa, n_b, 30).unwrap();
        let expected = kappa * alpha.norm_sqr() + n_b;
        assert!((out.mean_photon(0).unwrap() - expected).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_modes() {
        let st = vacuum2(4);
        assert!(apply_gaussian_unitary(&st, Generator::Squeezer { gain: 1.1 }, &[0]).is_err());
        assert!(apply_gaussian_unitary(&st, Generator::Squeezer { gain: 1.1 }, &[1, 1]).is_err());
        assert!(apply_gaussian_unitary(&st, Generator::Squeezer { gain: 0.5 }, &[0, 1]).is_err());
        assert!(apply_gaussian_unitary(&st, Generator::Phase { theta: 0.1 }, &[2]).is_err());
    }

    #[test]
    fn small_cutoff_is_reported() {
        let out = apply_gaussian_unitary(&vacuum2(3), Generator::Squeezer { gain: 2.0 }, &[0, 1])
            .unwrap();
        assert!(out.trace_deficit() > 1e-3);
    }
}

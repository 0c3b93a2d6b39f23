//! A Gaussian state described as a circuit, realizable both as a covariance
//! matrix and as a truncated density matrix.
//!
//! Oracle comparisons build the *same* physical state along two independent
//! routes: symplectic algebra on the covariance matrix, and matrix
//! exponentials of ladder-operator generators on the Fock space.

use super::{
    apply_gaussian_unitary, thermal_cutoff, thermal_dm, FockDensityMatrix, Generator, C64,
};
use crate::error::{check_at_least, invalid, Error, Result};
use crate::gaussian::{thermal_state, GaussianState, PHYSICALITY_TOLERANCE};

/// Largest Hilbert-space dimension the adaptive route will try.
const MAX_ADAPTIVE_DIM: usize = 4096;

/// One gate of a [`GaussianProgram`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProgramOp {
    Squeeze {
        i: usize,
        j: usize,
        gain: f64,
    },
    Beamsplitter {
        i: usize,
        j: usize,
        tau: f64,
    },
    Phase {
        mode: usize,
        theta: f64,
    },
    /// Displacement by `α = re + i·im`.
    Displace {
        mode: usize,
        re: f64,
        im: f64,
    },
}

/// Product thermal input followed by a sequence of Gaussian unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProgram {
    occupations: Vec<f64>,
    ops: Vec<ProgramOp>,
}

impl GaussianProgram {
    /// Starts from a product of thermal modes with the given occupations.
    pub fn new(occupations: Vec<f64>) -> Result<Self> {
        if occupations.is_empty() {
            return Err(invalid("occupations", "need at least one mode"));
        }
        for &n in &occupations {
            check_at_least("occupation", n, 0.0)?;
        }
        Ok(Self {
            occupations,
            ops: Vec::new(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.occupations.len()
    }

    pub fn ops(&self) -> &[ProgramOp] {
        &self.ops
    }

    /// Appends a gate after checking its mode indices.
    pub fn then(mut self, op: ProgramOp) -> Result<Self> {
        let n = self.n_modes();
        let modes: Vec<usize> = match op {
            ProgramOp::Squeeze { i, j, .. } | ProgramOp::Beamsplitter { i, j, .. } => vec![i, j],
            ProgramOp::Phase { mode, .. } | ProgramOp::Displace { mode, .. } => vec![mode],
        };
        if let Some(&bad) = modes.iter().find(|&&m| m >= n) {
            return Err(Error::ModeOutOfRange {
                index: bad,
                n_modes: n,
            });
        }
        if modes.len() == 2 && modes[0] == modes[1] {
            return Err(invalid("modes", "two-mode gate needs distinct modes"));
        }
        self.ops.push(op);
        Ok(self)
    }

    /// The same circuit with every displacement removed.
    pub fn without_displacements(&self) -> Self {
        Self {
            occupations: self.occupations.clone(),
            ops: self
                .ops
                .iter()
                .copied()
                .filter(|op| !matches!(op, ProgramOp::Displace { .. }))
                .collect(),
        }
    }

    /// Covariance-matrix route.
    pub fn to_gaussian(&self) -> Result<GaussianState> {
        let mut st = thermal_state(self.occupations[0], 1)?;
        for &n in &self.occupations[1..] {
            st = st.tensor(&thermal_state(n, 1)?);
        }
        for op in &self.ops {
            st = match *op {
                ProgramOp::Squeeze { i, j, gain } => st.two_mode_squeeze(i, j, gain)?,
                ProgramOp::Beamsplitter { i, j, tau } => st.beamsplitter(i, j, tau)?,
                ProgramOp::Phase { mode, theta } => st.phase_shift(mode, theta)?,
                ProgramOp::Displace { mode, re, im } => st.displace(mode, re, im)?,
            };
        }
        Ok(st)
    }

    /// Fock route at fixed per-mode cutoffs; truncation loss is recorded in
    /// the result's `trace_deficit`.
    pub fn to_fock(&self, cutoffs: &[usize]) -> Result<FockDensityMatrix> {
        if cutoffs.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: cutoffs.len(),
            });
        }
        let mut dm = thermal_dm(self.occupations[0], cutoffs[0])?;
        for (&n, &c) in self.occupations[1..].iter().zip(&cutoffs[1..]) {
            dm = dm.tensor(&thermal_dm(n, c)?);
        }
        for op in &self.ops {
            dm = match *op {
                ProgramOp::Squeeze { i, j, gain } => {
                    apply_gaussian_unitary(&dm, Generator::Squeezer { gain }, &[i, j])?
                }
                ProgramOp::Beamsplitter { i, j, tau } => {
                    apply_gaussian_unitary(&dm, Generator::Beamsplitter { tau }, &[i, j])?
                }
                ProgramOp::Phase { mode, theta } => {
                    apply_gaussian_unitary(&dm, Generator::Phase { theta }, &[mode])?
                }
                ProgramOp::Displace { mode, re, im } => apply_gaussian_unitary(
                    &dm,
                    Generator::Displacement {
                        alpha: C64::new(re, im),
                    },
                    &[mode],
                )?,
            };
        }
        Ok(dm)
    }

    /// Fock route with cutoffs grown until the truncation loss is below
    /// `bound`, starting from the thermal heuristic on each output mode.
    pub fn to_fock_adaptive(&self, bound: f64) -> Result<FockDensityMatrix> {
        let g = self.to_gaussian()?;
        let mut cutoffs: Vec<usize> = (0..self.n_modes())
            .map(|k| g.mean_photon(k).map(|n| thermal_cutoff(n, bound)))
            .collect::<Result<_>>()?;
        loop {
            let dm = self.to_fock(&cutoffs)?;
            if dm.trace_deficit() < bound {
                return Ok(dm);
            }
            for c in cutoffs.iter_mut() {
                *c += (*c / 4).max(2);
            }
            if cutoffs.iter().product::<usize>() > MAX_ADAPTIVE_DIM {
                return Err(Error::CutoffTooSmall {
                    deficit: dm.trace_deficit(),
                    bound,
                });
            }
        }
    }
}

/// Thermal occupations and squeezer gain realizing a two-mode standard-form
/// covariance `[[a I, c Z], [c Z, b I]]` as `S(G) (ρ_th(n1) ⊗ ρ_th(n2)) S(G)†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardForm {
    pub n1: f64,
    pub n2: f64,
    pub gain: f64,
}

/// Decomposes a standard-form block: `tanh 2r = 2c/(a+b)`,
/// `ν₁ + ν₂ = (a+b)/cosh 2r`, `ν₁ − ν₂ = a − b`, `G = cosh² r`.
pub fn standard_form_parameters(a: f64, b: f64, c: f64) -> Result<StandardForm> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) || a + b <= 0.0 {
        return Err(invalid("block", "entries must be finite with a + b > 0"));
    }
    if c < 0.0 {
        return Err(invalid("c", "expected a nonnegative correlation"));
    }
    let t = 2.0 * c / (a + b);
    if t >= 1.0 {
        return Err(Error::Unphysical { nu: 0.0 });
    }
    let two_r = t.atanh();
    let sum = (a + b) / two_r.cosh();
    let nu1 = 0.5 * (sum + a - b);
    let nu2 = 0.5 * (sum - a + b);
    for nu in [nu1, nu2] {
        if nu < 1.0 - PHYSICALITY_TOLERANCE {
            return Err(Error::Unphysical { nu });
        }
    }
    let r = 0.5 * two_r;
    Ok(StandardForm {
        n1: ((nu1 - 1.0) / 2.0).max(0.0),
        n2: ((nu2 - 1.0) / 2.0).max(0.0),
        gain: r.cosh().powi(2),
    })
}

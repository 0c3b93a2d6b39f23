//! Truncated-Fock-space oracle.
//!
//! States are dense complex matrices over the product basis
//! `|n₀, n₁, …⟩` with per-mode cutoffs; mode 0 is the most significant
//! index (Kronecker ordering). Every constructor and operation renormalizes
//! the state and accumulates the probability mass lost to truncation in
//! `trace_deficit`.
//!
//! Nothing here depends on the covariance-matrix layer: this module is the
//! independent reference the analytic formulas are checked against.

mod measures;
mod program;
mod unitary;

pub use measures::{helstrom_binary, overlap_fock, pgm_error, uhlmann_fidelity_fock, FockOverlap};
pub use program::{standard_form_parameters, GaussianProgram, ProgramOp, StandardForm};
pub use unitary::{apply_gaussian_unitary, thermal_loss_fock, Generator};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{check_at_least, invalid, Error, Result};

pub type C64 = Complex<f64>;

/// Default bound on accepted truncation loss.
pub const DEFAULT_DEFICIT_BOUND: f64 = 1e-10;

/// Cutoff such that a thermal mode with `n` photons loses less than
/// `deficit` of its mass: `n_cut ≥ ln(deficit) / ln(n/(n+1))`.
pub fn thermal_cutoff(n: f64, deficit: f64) -> usize {
    if n <= 0.0 {
        return 2;
    }
    let q = n / (n + 1.0);
    ((deficit.ln() / q.ln()).ceil() as usize).max(2)
}

/// Pure state over a truncated multimode Fock basis.
#[derive(Debug, Clone)]
pub struct FockStateVector {
    cutoffs: Vec<usize>,
    amplitudes: DVector<C64>,
    trace_deficit: f64,
}

impl FockStateVector {
    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn to_density(&self) -> FockDensityMatrix {
        let data = &self.amplitudes * self.amplitudes.adjoint();
        FockDensityMatrix {
            cutoffs: self.cutoffs.clone(),
            data,
            trace_deficit: self.trace_deficit,
        }
    }

    fn normalized(cutoffs: Vec<usize>, amplitudes: DVector<C64>) -> Self {
        let norm_sq = amplitudes.norm_squared();
        let trace_deficit = (1.0 - norm_sq).max(0.0);
        Self {
            cutoffs,
            amplitudes: amplitudes / C64::new(norm_sq.sqrt(), 0.0),
            trace_deficit,
        }
    }
}

/// Density matrix over a truncated multimode Fock basis.
#[derive(Debug, Clone)]
pub struct FockDensityMatrix {
    cutoffs: Vec<usize>,
    data: DMatrix<C64>,
    trace_deficit: f64,
}

impl FockDensityMatrix {
    /// Wraps raw data; the matrix is Hermitized and normalized.
    pub fn from_matrix(
        cutoffs: Vec<usize>,
        data: DMatrix<C64>,
        trace_deficit: f64,
    ) -> Result<Self> {
        let dim: usize = cutoffs.iter().product();
        if cutoffs.is_empty() || cutoffs.contains(&0) {
            return Err(invalid(
                "cutoffs",
                "need at least one mode with positive cutoff",
            ));
        }
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.nrows(),
            });
        }
        let data = (&data + data.adjoint()) * C64::new(0.5, 0.0);
        let mut out = Self {
            cutoffs,
            data,
            trace_deficit,
        };
        out.renormalize(0.0)?;
        Ok(out)
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn trace(&self) -> f64 {
        self.data.diagonal().iter().map(|z| z.re).sum()
    }

    /// Errors when truncation lost more than `bound`.
    pub fn ensure_deficit_below(&self, bound: f64) -> Result<()> {
        if self.trace_deficit > bound {
            return Err(Error::CutoffTooSmall {
                deficit: self.trace_deficit,
                bound,
            });
        }
        Ok(())
    }

    /// Records `lost` extra truncation loss and rescales to unit trace.
    fn renormalize(&mut self, lost: f64) -> Result<()> {
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(Error::Numerical(
                "density matrix has no weight inside the cutoff".into(),
            ));
        }
        self.trace_deficit += lost;
        self.data /= C64::new(tr, 0.0);
        Ok(())
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &FockDensityMatrix) -> FockDensityMatrix {
        let data = self.data.kronecker(&other.data);
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend_from_slice(&other.cutoffs);
        let trace_deficit = 1.0 - (1.0 - self.trace_deficit) * (1.0 - other.trace_deficit);
        FockDensityMatrix {
            cutoffs,
            data,
            trace_deficit,
        }
    }

    /// Traces out one mode.
    pub fn partial_trace(&self, mode: usize) -> Result<FockDensityMatrix> {
        if mode >= self.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                n_modes: self.n_modes(),
            });
        }
        if self.n_modes() == 1 {
            return Err(invalid("mode", "cannot trace out the only mode"));
        }
        let c = self.cutoffs[mode];
        let inner: usize = self.cutoffs[mode + 1..].iter().product();
        let outer: usize = self.cutoffs[..mode].iter().product();
        let dim = outer * inner;
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        for (a_out, a_in) in index_pairs(outer, inner) {
            let row = a_out * inner + a_in;
            for (b_out, b_in) in index_pairs(outer, inner) {
                let col = b_out * inner + b_in;
                let mut acc = C64::new(0.0, 0.0);
                for n in 0..c {
                    acc += self.data[(
                        (a_out * c + n) * inner + a_in,
                        (b_out * c + n) * inner + b_in,
                    )];
                }
                out[(row, col)] = acc;
            }
        }
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.remove(mode);
        Ok(FockDensityMatrix {
            cutoffs,
            data: out,
            trace_deficit: self.trace_deficit,
        })
    }

    /// `⟨a†a⟩` of one mode.
    pub fn mean_photon(&self, mode: usize) -> Result<f64> {
        if mode >= self.n_modes() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                n_modes: self.n_modes(),
            });
        }
        let stride: usize = self.cutoffs[mode + 1..].iter().product();
        let c = self.cutoffs[mode];
        Ok((0..self.dim())
            .map(|i| self.data[(i, i)].re * ((i / stride) % c) as f64)
            .sum())
    }

    /// Largest `|ρ − ρ†|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.data - self.data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.data).0.min()
    }
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix; only
/// the lower triangle is read.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let a = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let Ok(eig) = a.self_adjoint_eigen(faer::Side::Lower) else {
        // faer only fails on non-finite input
        return (
            DVector::from_element(n, f64::NAN),
            DMatrix::from_element(n, n, C64::new(f64::NAN, 0.0)),
        );
    };
    let (s, u) = (eig.S().column_vector(), eig.U());
    let values = DVector::from_fn(n, |i, _| s[i].re);
    let vectors = DMatrix::from_fn(n, n, |i, j| {
        let z = u[(i, j)];
        C64::new(z.re, z.im)
    });
    (values, vectors)
}

fn index_pairs(outer: usize, inner: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..outer).flat_map(move |o| (0..inner).map(move |i| (o, i)))
}

/// Thermal state with `n` photons on one mode.
pub fn thermal_dm(n: f64, cutoff: usize) -> Result<FockDensityMatrix> {
    check_at_least("n", n, 0.0)?;
    check_cutoff(cutoff, 1)?;
    let q = n / (n + 1.0);
    let diag: Vec<C64> = (0..cutoff)
        .map(|k| C64::new((1.0 - q) * q.powi(k as i32), 0.0))
        .collect();
    let total: f64 = diag.iter().map(|z| z.re).sum();
    let data = DMatrix::from_diagonal(&DVector::from_vec(diag)) / C64::new(total, 0.0);
    Ok(FockDensityMatrix {
        cutoffs: vec![cutoff],
        data,
        trace_deficit: (1.0 - total).max(0.0),
    })
}

/// Coherent state `|α⟩` from its Poissonian amplitudes.
pub fn coherent_vector(alpha: C64, cutoff: usize) -> Result<FockStateVector> {
    check_cutoff(cutoff, 1)?;
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(invalid("alpha", "must be finite"));
    }
    let mut amps = Vec::with_capacity(cutoff);
    let mut a = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..cutoff {
        amps.push(a);
        a = a * alpha / ((k + 1) as f64).sqrt();
    }
    Ok(FockStateVector::normalized(
        vec![cutoff],
        DVector::from_vec(amps),
    ))
}

/// Two-mode squeezed vacuum `Σ √(N_Sⁿ/(N_S+1)^{n+1}) |n⟩|n⟩`.
pub fn tmsv_vector(n_s: f64, cutoff: usize) -> Result<FockStateVector> {
    check_at_least("n_s", n_s, 0.0)?;
    check_cutoff(cutoff, 2)?;
    let q = n_s / (n_s + 1.0);
    let mut amps = DVector::<C64>::zeros(cutoff * cutoff);
    for k in 0..cutoff {
        amps[k * cutoff + k] = C64::new(((1.0 - q) * q.powi(k as i32)).sqrt(), 0.0);
    }
    Ok(FockStateVector::normalized(vec![cutoff, cutoff], amps))
}

/// Displaced thermal state `D(α) ρ_th(N) D(α)†`, with `D(α)` from the
/// matrix exponential of `α a† − α* a`.
pub fn displaced_thermal_dm(alpha: C64, n: f64, cutoff: usize) -> Result<FockDensityMatrix> {
    let th = thermal_dm(n, cutoff)?;
    apply_gaussian_unitary(&th, Generator::Displacement { alpha }, &[0])
}

fn check_cutoff(cutoff: usize, min: usize) -> Result<()> {
    if cutoff < min {
        return Err(invalid(
            "cutoff",
            format!("must be at least {min}, got {cutoff}"),
        ));
    }
    Ok(())
}

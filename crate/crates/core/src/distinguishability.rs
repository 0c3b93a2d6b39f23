//! Closed-form distinguishability of Gaussian states.
//!
//! The s-overlap `Q_s = Tr[ρ₁ˢ ρ₂^{1−s}]` is evaluated by bringing each
//! state to its Williamson normal form `V = S (⊕ νₖ I₂) Sᵀ`. The power of a
//! thermal mode is again thermal up to normalization, so `ρˢ` is an
//! unnormalized Gaussian operator with covariance `S (⊕ Λₛ(νₖ) I₂) Sᵀ`
//! and weight `∏ Gₛ(νₖ)`, where with `q = (ν−1)/(ν+1)`:
//!
//! ```text
//! Gₛ(ν) = (2/(ν+1))ˢ / (1 − qˢ),      Λₛ(ν) = (1 + qˢ)/(1 − qˢ).
//! ```
//!
//! The trace of a product of two normalized Gaussian operators with
//! covariances `A`, `B` and mean difference `δ` is
//! `2ⁿ/√det(A+B) · exp(−δᵀ(A+B)⁻¹δ/2)`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{sqrt_and_inv_sqrt, GaussianState, SymplecticForm, PHYSICALITY_TOLERANCE};

/// Endpoints of the interior ternary search over `s`.
pub const S_INTERIOR_MIN: f64 = 1e-6;
pub const S_TOLERANCE: f64 = 1e-6;

/// Optimum of the s-overlap for a pair of states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapResult {
    pub s_star: f64,
    pub q_star: f64,
    /// `−ln Q_star`.
    pub exponent: f64,
}

/// Williamson normal form: `cov = S · diag(ν₁,ν₁,…,νₙ,νₙ) · Sᵀ`.
#[derive(Debug, Clone)]
pub struct WilliamsonForm {
    pub nu: Vec<f64>,
    pub symplectic: DMatrix<f64>,
}

impl WilliamsonForm {
    /// Decomposes a physical covariance matrix.
    ///
    /// Uses the antisymmetric matrix `K = V^{-1/2} Ω V^{-1/2}`: its invariant
    /// planes give an orthogonal `O` with `Oᵀ K O = ⊕ ν⁻¹ [[0,1],[−1,0]]`,
    /// and then `S = V^{1/2} O D^{-1/2}`.
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if dim == 0 || dim % 2 == 1 || cov.ncols() != dim {
            return Err(invalid("cov", "must be a square 2n × 2n matrix"));
        }
        let n = dim / 2;
        let (root, inv_root) = sqrt_and_inv_sqrt(cov)?;
        let k = &inv_root * SymplecticForm::new(n).matrix() * &inv_root;
        let b = -(&k * &k);
        let b = (&b + b.transpose()) * 0.5;
        let eig = SymmetricEigen::new(b.clone());

        // Largest 1/ν² first, so the purest modes are paired first.
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));

        let mut columns: Vec<DVector<f64>> = Vec::with_capacity(dim);
        let mut nu = Vec::with_capacity(n);
        let mut used = vec![false; dim];
        for _ in 0..n {
            let mut pick = None;
            let mut best = (0usize, -1.0f64, None);
            for &idx in &order {
                if used[idx] {
                    continue;
                }
                let r = project_out(&eig.eigenvectors.column(idx).into_owned(), &columns);
                let norm = r.norm();
                if norm > 0.7 {
                    pick = Some((idx, r / norm));
                    break;
                }
                if norm > best.1 {
                    best = (idx, norm, Some(r));
                }
            }
            let (idx, u) = match pick {
                Some(p) => p,
                None => {
                    let (idx, norm, r) = best;
                    let r =
                        r.ok_or_else(|| Error::Numerical("Williamson basis exhausted".into()))?;
                    (idx, r / norm)
                }
            };
            used[idx] = true;
            let inv_nu_sq = (u.transpose() * &b * &u)[(0, 0)];
            let nu_k = 1.0 / inv_nu_sq.max(f64::MIN_POSITIVE).sqrt();
            let mut w = -(&k * &u) * nu_k;
            w = project_out(&w, &columns);
            w -= &u * u.dot(&w);
            let w_norm = w.norm();
            if w_norm < 1e-8 {
                return Err(Error::Numerical("degenerate Williamson plane".into()));
            }
            columns.push(u);
            columns.push(w / w_norm);
            nu.push(nu_k);
        }

        let o = DMatrix::from_columns(&columns);
        let mut scaled = o;
        for (kk, &v) in nu.iter().enumerate() {
            let f = 1.0 / v.sqrt();
            scaled.column_mut(2 * kk).scale_mut(f);
            scaled.column_mut(2 * kk + 1).scale_mut(f);
        }
        let symplectic = root * scaled;
        for v in &nu {
            if *v < 1.0 - PHYSICALITY_TOLERANCE {
                return Err(Error::Unphysical { nu: *v });
            }
        }
        let nu = nu.into_iter().map(|v| v.max(1.0)).collect();
        Ok(Self { nu, symplectic })
    }

    /// `S⁻¹ = Ω Sᵀ Ωᵀ` for symplectic `S`.
    pub fn inverse_symplectic(&self) -> DMatrix<f64> {
        let omega = SymplecticForm::new(self.nu.len()).matrix();
        &omega * self.symplectic.transpose() * omega.transpose()
    }

    fn is_pure_mode(&self, k: usize) -> bool {
        self.nu[k] - 1.0 <= PHYSICALITY_TOLERANCE
    }
}

fn project_out(v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut r = v.clone();
    for b in basis {
        r -= b * b.dot(&r);
    }
    r
}

/// A state prepared for repeated s-overlap evaluations.
#[derive(Debug, Clone)]
pub struct PreparedState {
    mean: DVector<f64>,
    form: WilliamsonForm,
}

impl PreparedState {
    pub fn new(state: &GaussianState) -> Result<Self> {
        Ok(Self {
            mean: state.mean().clone(),
            form: WilliamsonForm::new(state.cov())?,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.form.nu.len()
    }

    /// `ln` of the weight and the covariance of the Gaussian operator `ρˢ`.
    fn power(&self, s: f64) -> (f64, DMatrix<f64>) {
        let mut log_weight = 0.0;
        let mut diag = DVector::zeros(2 * self.n_modes());
        for (k, &nu) in self.form.nu.iter().enumerate() {
            let (lw, lambda) = thermal_power(nu, s);
            log_weight += lw;
            diag[2 * k] = lambda;
            diag[2 * k + 1] = lambda;
        }
        let s_mat = &self.form.symplectic;
        (
            log_weight,
            s_mat * DMatrix::from_diagonal(&diag) * s_mat.transpose(),
        )
    }
}

/// `(ln Gₛ(ν), Λₛ(ν))` for a thermal mode with symplectic eigenvalue `ν`.
fn thermal_power(nu: f64, s: f64) -> (f64, f64) {
    if nu - 1.0 <= PHYSICALITY_TOLERANCE {
        return (0.0, 1.0);
    }
    // q^s = exp(-s·β), β = ln((ν+1)/(ν−1))
    let beta = ((nu + 1.0) / (nu - 1.0)).ln();
    let one_minus_qs = -(-s * beta).exp_m1();
    let log_weight = s * (2.0 / (nu + 1.0)).ln() - one_minus_qs.ln();
    let lambda = 1.0 / (0.5 * s * beta).tanh();
    (log_weight, lambda)
}

/// `ln Tr[σ_A σ_B]` for normalized Gaussian operators with covariances
/// `a`, `b` and mean difference `delta`.
fn log_gaussian_trace(a: &DMatrix<f64>, b: &DMatrix<f64>, delta: &DVector<f64>) -> Result<f64> {
    let sum = a + b;
    let n = sum.nrows() / 2;
    let chol = sum
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("combined covariance not positive definite".into()))?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let quad = delta.dot(&chol.solve(delta));
    Ok(n as f64 * std::f64::consts::LN_2 - 0.5 * log_det - 0.5 * quad)
}

fn check_pair(a: &GaussianState, b: &GaussianState) -> Result<()> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_modes(),
            found: b.n_modes(),
        });
    }
    Ok(())
}

/// `ln Q_s` for prepared states, `s ∈ [0, 1]` (endpoints as support limits).
pub fn log_overlap_prepared(a: &PreparedState, b: &PreparedState, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) || s.is_nan() {
        return Err(invalid("s", format!("must lie in [0, 1], got {s}")));
    }
    if a.n_modes() != b.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_modes(),
            found: b.n_modes(),
        });
    }
    if s == 0.0 {
        return log_support_overlap(a, b);
    }
    if s == 1.0 {
        return log_support_overlap(b, a);
    }
    let (wa, va) = a.power(s);
    let (wb, vb) = b.power(1.0 - s);
    let delta = &a.mean - &b.mean;
    Ok(wa + wb + log_gaussian_trace(&va, &vb, &delta)?)
}

/// `ln Tr[P_A ρ_B]` where `P_A` projects onto the support of `ρ_A` (the
/// `s → 0⁺` limit of `Q_s(A, B)`).
///
/// Mixed Williamson modes of `A` have full support; pure ones project onto
/// the vacuum of the corresponding normal mode.
fn log_support_overlap(a: &PreparedState, b: &PreparedState) -> Result<f64> {
    let pure: Vec<usize> = (0..a.n_modes())
        .filter(|&k| a.form.is_pure_mode(k))
        .collect();
    if pure.is_empty() {
        return Ok(0.0);
    }
    let s_inv = a.form.inverse_symplectic();
    let b_cov = b.form.symplectic.clone()
        * DMatrix::from_diagonal(&DVector::from_iterator(
            2 * b.n_modes(),
            b.form.nu.iter().flat_map(|&v| [v, v]),
        ))
        * b.form.symplectic.transpose();
    let cov = &s_inv * b_cov * s_inv.transpose();
    let delta = &s_inv * (&b.mean - &a.mean);
    let idx: Vec<usize> = pure.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| cov[(idx[r], idx[c])]);
    let d = DVector::from_iterator(idx.len(), idx.iter().map(|&i| delta[i]));
    log_gaussian_trace(&sub, &DMatrix::identity(idx.len(), idx.len()), &d)
}

/// `Q_s = Tr[ρ₁ˢ ρ₂^{1−s}]`.
pub fn gaussian_overlap(state1: &GaussianState, state2: &GaussianState, s: f64) -> Result<f64> {
    check_pair(state1, state2)?;
    let (a, b) = (PreparedState::new(state1)?, PreparedState::new(state2)?);
    Ok(log_overlap_prepared(&a, &b, s)?.exp())
}

/// Quantum Chernoff exponent `max_s −ln Q_s` of a pair of states.
///
/// `ln Q_s` is convex in `s`; a golden-section search covers the interior
/// and the two support limits are compared explicitly. Pairs exchanged by
/// an involutive mode permutation have a symmetric overlap, so their
/// optimum sits at `s = 1/2`.
pub fn chernoff_exponent(state1: &GaussianState, state2: &GaussianState) -> Result<OverlapResult> {
    check_pair(state1, state2)?;
    let (a, b) = (PreparedState::new(state1)?, PreparedState::new(state2)?);
    if swap_symmetric(state1, state2) {
        return Ok(result_at(0.5, log_overlap_prepared(&a, &b, 0.5)?));
    }
    chernoff_prepared(&a, &b)
}

pub fn chernoff_prepared(a: &PreparedState, b: &PreparedState) -> Result<OverlapResult> {
    let f = |s: f64| log_overlap_prepared(a, b, s);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (S_INTERIOR_MIN, 1.0 - S_INTERIOR_MIN);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > S_TOLERANCE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for s in [0.0, 1.0] {
        let v = f(s)?;
        if v < best.1 - 1e-10 {
            best = (s, v);
        }
    }
    Ok(result_at(best.0, best.1))
}

fn result_at(s: f64, log_q: f64) -> OverlapResult {
    let log_q = log_q.min(0.0);
    OverlapResult {
        s_star: s,
        q_star: log_q.exp(),
        exponent: -log_q,
    }
}

/// True when some involutive mode permutation maps `a` onto `b`.
pub fn swap_symmetric(a: &GaussianState, b: &GaussianState) -> bool {
    let n = a.n_modes();
    if n != b.n_modes() || n > 8 {
        return false;
    }
    let tol = 1e-12 * a.cov().amax().max(1.0);
    let mut perm: Vec<usize> = (0..n).collect();
    involutions(&mut perm, 0, &mut |p| {
        a.permute_modes(p)
            .map(|pa| (pa.cov() - b.cov()).amax() <= tol && (pa.mean() - b.mean()).amax() <= tol)
            .unwrap_or(false)
    })
}

/// Enumerates involutive permutations (products of disjoint swaps) and
/// stops at the first one accepted by `check`.
fn involutions(
    perm: &mut Vec<usize>,
    start: usize,
    check: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let n = perm.len();
    let mut i = start;
    while i < n && perm[i] != i {
        i += 1;
    }
    if i >= n {
        return check(perm);
    }
    if involutions(perm, i + 1, check) {
        return true;
    }
    for j in i + 1..n {
        if perm[j] == j {
            perm.swap(i, j);
            let found = involutions(perm, i + 1, check);
            perm.swap(i, j);
            if found {
                return true;
            }
        }
    }
    false
}

/// Multiary Chernoff exponent: the minimum pairwise exponent.
///
/// With `symmetric = true` the caller asserts that every pair is related to
/// the `(0, 1)` pair by a mode permutation, and only that pair is evaluated.
pub fn multihypothesis_exponent(states: &[GaussianState], symmetric: bool) -> Result<f64> {
    if states.len() < 2 {
        return Err(invalid("states", "need at least two hypotheses"));
    }
    if symmetric {
        return Ok(chernoff_exponent(&states[0], &states[1])?.exponent);
    }
    let mut best = f64::INFINITY;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            best = best.min(chernoff_exponent(&states[i], &states[j])?.exponent);
        }
    }
    Ok(best)
}

/// Uhlmann fidelity `Tr√(√ρ₁ ρ₂ √ρ₁)` of two zero-mean Gaussian states.
///
/// Closed form in terms of the auxiliary matrix
/// `V_aux = Ωᵀ (V₁+V₂)⁻¹ (Ω/4 + V₂ Ω V₁)` (covariances rescaled to vacuum
/// `I/2`): `F = F_tot / det(V₁+V₂)^{1/4}` with
/// `F_tot⁴ = det[2(√(I + (V_aux Ω)⁻²/4) + I) V_aux]`.
pub fn gaussian_fidelity_zero_mean(state1: &GaussianState, state2: &GaussianState) -> Result<f64> {
    check_pair(state1, state2)?;
    if !state1.is_zero_mean() || !state2.is_zero_mean() {
        return Err(Error::Unsupported(
            "fidelity is implemented for zero-mean states only".into(),
        ));
    }
    let n = state1.n_modes();
    let omega = SymplecticForm::new(n).matrix();
    let v1 = state1.cov() * 0.5;
    let v2 = state2.cov() * 0.5;
    let sum = &v1 + &v2;
    let sum_inv = sum
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular covariance sum".into()))?;
    let v_aux = omega.transpose() * &sum_inv * (&omega * 0.25 + &v2 * &omega * &v1);
    let x = &v_aux * &omega;
    let eig = x.complex_eigenvalues();
    let one = Complex::new(1.0, 0.0);
    let mut prod = Complex::new(1.0, 0.0);
    for lambda in eig.iter() {
        let inv_sq = one / (lambda * lambda);
        prod *= one + (one + inv_sq * 0.25).sqrt();
    }
    let det_aux = (&v_aux * 2.0).determinant();
    let f_tot4 = prod.re * det_aux;
    if !(f_tot4 > 0.0) {
        return Err(Error::Numerical(format!(
            "fidelity determinant not positive: {f_tot4}"
        )));
    }
    let det_sum = sum.determinant();
    let f = f_tot4.powf(0.25) / det_sum.powf(0.25);
    Ok(f.min(1.0))
}

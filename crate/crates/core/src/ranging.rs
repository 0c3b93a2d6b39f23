//! Ranging scenario and closed-form error-probability bounds.
//!
//! A pulse of `M` modes is sent toward a target that lies in one of `m`
//! range slices with equal prior. Each returned mode carries `κN_S` signal
//! photons on top of `N_B` background photons; a classical probe is a
//! coherent state, an entangled probe is a two-mode squeezed vacuum whose
//! idler is kept at the transmitter.
//!
//! Probabilities are reported with the prefactors `(m−1)/m`, `(m−1)/(2m)`
//! and `m−1` that match the random-guess limit; per-mode exponents are
//! reported separately because the prefactors are heuristics.

use dashu_float::FBig;
use dashu_int::IBig;

use crate::distinguishability::{chernoff_exponent, gaussian_fidelity_zero_mean, OverlapResult};
use crate::error::{check_at_least, check_unit_interval, invalid, Error, Result};
use crate::fock::{
    displaced_thermal_dm, helstrom_binary, pgm_error, thermal_dm, uhlmann_fidelity_fock,
    FockDensityMatrix, C64,
};
use crate::gaussian::{two_mode_block, GaussianState};
use nalgebra::{DMatrix, DVector};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Working precision, in bits, of the direct-detection sum (about 77
/// decimal digits).
pub const DD_PRECISION_BITS: usize = 256;

/// Largest `m` for which the double-precision direct-detection sum is
/// allowed.
pub const DD_F64_MAX_SLICES: usize = 20;

/// Round-trip time of slice `ℓ` for slice width `Δ` metres: `2ℓΔ/c`.
pub fn slice_time(slice: usize, width: f64) -> Result<f64> {
    check_at_least("width", width, 0.0)?;
    Ok(2.0 * slice as f64 * width / SPEED_OF_LIGHT)
}

/// The tuple `(m, M, N_S, N_B, κ)` with uniform priors over the slices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangingScenario {
    /// Number of range slices.
    pub m: usize,
    /// Modes per pulse.
    pub big_m: f64,
    /// Signal photons per mode.
    pub n_s: f64,
    /// Background photons per mode.
    pub n_b: f64,
    /// Target reflectivity.
    pub kappa: f64,
    /// Optional slice width in metres.
    pub slice_width: Option<f64>,
}

impl RangingScenario {
    /// Validates and builds a scenario. `κ = 0` and `N_S = 0` are accepted
    /// as the degenerate no-signal limits.
    pub fn new(m: usize, big_m: f64, n_s: f64, n_b: f64, kappa: f64) -> Result<Self> {
        if m < 2 {
            return Err(invalid("m", format!("need at least 2 slices, got {m}")));
        }
        if !(big_m >= 1.0 && big_m.is_finite() && big_m.fract() == 0.0) {
            return Err(invalid(
                "big_m",
                format!("must be a positive integer, got {big_m}"),
            ));
        }
        check_at_least("n_s", n_s, 0.0)?;
        check_at_least("n_b", n_b, 0.0)?;
        check_unit_interval("kappa", kappa)?;
        Ok(Self {
            m,
            big_m,
            n_s,
            n_b,
            kappa,
            slice_width: None,
        })
    }

    pub fn with_slice_width(mut self, width: f64) -> Result<Self> {
        check_at_least("slice_width", width, 0.0)?;
        self.slice_width = Some(width);
        Ok(self)
    }

    pub fn with_big_m(self, big_m: f64) -> Result<Self> {
        Self::new(self.m, big_m, self.n_s, self.n_b, self.kappa)
    }

    /// Prior of each slice.
    pub fn prior(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Random-guess error `(m−1)/m`.
    pub fn guess_error(&self) -> f64 {
        (self.m as f64 - 1.0) / self.m as f64
    }

    /// Total returned signal photons `MκN_S`.
    pub fn returned_photons(&self) -> f64 {
        self.big_m * self.kappa * self.n_s
    }
}

/// Per-mode exponent of the coherent-state Chernoff bound:
/// `2κN_S / (1 + 2N_B + 2√(N_B(1+N_B)))`.
pub fn classical_qcb_exponent(sc: &RangingScenario) -> f64 {
    let nb = sc.n_b;
    2.0 * sc.kappa * sc.n_s / (1.0 + 2.0 * nb + 2.0 * (nb * (1.0 + nb)).sqrt())
}

/// Coherent-state Chernoff bound `(m−1)/m · exp(−M·E)`.
pub fn classical_qcb(sc: &RangingScenario) -> f64 {
    sc.guess_error() * (-sc.big_m * classical_qcb_exponent(sc)).exp()
}

/// High-noise form `(m−1)/m · exp(−MκN_S/2N_B)`.
pub fn classical_qcb_high_noise(sc: &RangingScenario) -> Result<f64> {
    if sc.n_b <= 0.0 {
        return Err(invalid("n_b", "high-noise form needs N_B > 0"));
    }
    Ok(sc.guess_error() * (-sc.returned_photons() / (2.0 * sc.n_b)).exp())
}

/// Per-mode exponent `2κN_S/(1+2N_B)` of the classical lower bound.
pub fn classical_lower_bound_exponent(sc: &RangingScenario) -> f64 {
    2.0 * sc.kappa * sc.n_s / (1.0 + 2.0 * sc.n_b)
}

/// Lower bound on any classical probe: `(m−1)/(2m) · exp(−2MκN_S/(1+2N_B))`.
pub fn classical_lower_bound(sc: &RangingScenario) -> f64 {
    0.5 * sc.guess_error() * (-sc.big_m * classical_lower_bound_exponent(sc)).exp()
}

fn big(x: f64, bits: usize) -> Result<FBig> {
    let v =
        FBig::try_from(x).map_err(|_| Error::Numerical(format!("cannot represent {x} exactly")))?;
    Ok(v.with_precision(bits).value())
}

fn binomial(n: usize, k: usize) -> IBig {
    let mut c = IBig::from(1u8);
    for i in 0..k {
        c = c * IBig::from(n - i) / IBig::from(i + 1);
    }
    c
}

/// Coherent-state direct-detection error,
/// `(1/m) Σ_{k=2}^{m} (−1)^k C(m,k) exp[−(1−v)(1−v^{k−1})κMN_S/(1−v^k)]`
/// with `v = N_B/(N_B+1)`, summed in 256-bit floating point.
pub fn classical_dd(sc: &RangingScenario) -> Result<f64> {
    classical_dd_with_precision(sc, DD_PRECISION_BITS)
}

/// [`classical_dd`] at an explicit working precision in bits.
pub fn classical_dd_with_precision(sc: &RangingScenario, bits: usize) -> Result<f64> {
    if bits < 64 {
        return Err(invalid("bits", "use at least 64 bits"));
    }
    if sc.n_b == 0.0 {
        return Ok(sc.guess_error() * (-sc.returned_photons()).exp());
    }
    let one = big(1.0, bits)?;
    let x = big(sc.returned_photons(), bits)?;
    let nb = big(sc.n_b, bits)?;
    let v = &nb / (&nb + &one);
    let one_minus_v = &one - &v;
    let mut v_pow = v.clone(); // v^{k−1}
    let mut total = big(0.0, bits)?;
    for k in 2..=sc.m {
        let v_next = &v_pow * &v; // v^k
        let rate = &one_minus_v * (&one - &v_pow) / (&one - &v_next);
        let term = (-(rate * &x)).exp() * FBig::from(binomial(sc.m, k));
        total = if k % 2 == 0 {
            total + term
        } else {
            total - term
        };
        v_pow = v_next;
    }
    let p = total / big(sc.m as f64, bits)?;
    Ok(p.to_f64().value())
}

/// The same sum in double precision; refused above
/// [`DD_F64_MAX_SLICES`] slices where cancellation destroys every digit.
pub fn classical_dd_f64(sc: &RangingScenario) -> Result<f64> {
    if sc.m > DD_F64_MAX_SLICES {
        return Err(Error::Unsupported(format!(
            "double-precision direct-detection sum is unreliable for m = {} > {DD_F64_MAX_SLICES}",
            sc.m
        )));
    }
    if sc.n_b == 0.0 {
        return Ok(sc.guess_error() * (-sc.returned_photons()).exp());
    }
    let x = sc.returned_photons();
    let v = sc.n_b / (sc.n_b + 1.0);
    let mut total = 0.0;
    let mut binom = sc.m as f64; // C(m, 1)
    for k in 2..=sc.m {
        binom *= (sc.m - k + 1) as f64 / k as f64;
        let rate = (1.0 - v) * (1.0 - v.powi(k as i32 - 1)) / (1.0 - v.powi(k as i32));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * (-rate * x).exp();
    }
    Ok(total / sc.m as f64)
}

/// Two-slice direct detection: `½ exp(−MκN_S/(2N_B+1))`.
pub fn classical_dd_two_slice(sc: &RangingScenario) -> f64 {
    0.5 * (-sc.returned_photons() / (2.0 * sc.n_b + 1.0)).exp()
}

/// Zero-mean three-mode states `(return₁, return₂, idler)` for a target in
/// slice 1 or slice 2. Slices other than these two are identical thermal
/// modes under both hypotheses and drop out of every pairwise measure.
///
/// With `passive_signature` off the correlated return has `2N_B+1` on its
/// diagonal, omitting the brightness term; with it on the diagonal is
/// `2(N_B+κN_S)+1`.
pub fn build_three_mode_covariances(
    sc: &RangingScenario,
    passive_signature: bool,
) -> Result<(GaussianState, GaussianState)> {
    let noise = 2.0 * sc.n_b + 1.0;
    let lit = if passive_signature {
        2.0 * (sc.n_b + sc.kappa * sc.n_s) + 1.0
    } else {
        noise
    };
    let idler = 2.0 * sc.n_s + 1.0;
    let cross = 2.0 * (sc.kappa * sc.n_s * (sc.n_s + 1.0)).sqrt();
    let build = |target: usize| -> Result<GaussianState> {
        let mut cov = DMatrix::<f64>::identity(6, 6) * noise;
        let block = two_mode_block(lit, idler, cross);
        let modes = [target, 2];
        for (bi, &mi) in modes.iter().enumerate() {
            for (bj, &mj) in modes.iter().enumerate() {
                cov.view_mut((2 * mi, 2 * mj), (2, 2))
                    .copy_from(&block.view((2 * bi, 2 * bj), (2, 2)));
            }
        }
        GaussianState::new(DVector::zeros(6), cov)
    };
    Ok((build(0)?, build(1)?))
}

/// Chernoff data per mode of the entangled pair.
pub fn entangled_qcb_exponent(
    sc: &RangingScenario,
    passive_signature: bool,
) -> Result<OverlapResult> {
    let (a, b) = build_three_mode_covariances(sc, passive_signature)?;
    // identical hypotheses; skip the roundoff of the general formula
    if sc.kappa == 0.0 {
        return Ok(OverlapResult {
            s_star: 0.5,
            q_star: 1.0,
            exponent: 0.0,
        });
    }
    chernoff_exponent(&a, &b)
}

/// Entangled Chernoff bound `(m−1)/m · exp(−M·C)`.
pub fn entangled_qcb_full(sc: &RangingScenario, passive_signature: bool) -> Result<f64> {
    let c = entangled_qcb_exponent(sc, passive_signature)?.exponent;
    Ok(sc.guess_error() * (-sc.big_m * c).exp())
}

/// High-noise entangled bound `(m−1)/m · exp(−2MκN_S/N_B)`.
pub fn entangled_qcb_asymptotic(sc: &RangingScenario) -> Result<f64> {
    if sc.n_b <= 0.0 {
        return Err(invalid("n_b", "asymptotic form needs N_B > 0"));
    }
    Ok(sc.guess_error() * (-2.0 * sc.returned_photons() / sc.n_b).exp())
}

/// Fidelity of the entangled pair per mode.
pub fn entangled_fidelity(sc: &RangingScenario, passive_signature: bool) -> Result<f64> {
    let (a, b) = build_three_mode_covariances(sc, passive_signature)?;
    if sc.kappa == 0.0 {
        return Ok(1.0);
    }
    gaussian_fidelity_zero_mean(&a, &b)
}

/// Fidelity upper bound `min(1, (m−1) F^M)`.
pub fn entangled_upper_bound(sc: &RangingScenario, passive_signature: bool) -> Result<f64> {
    let f = entangled_fidelity(sc, passive_signature)?;
    Ok(((sc.m as f64 - 1.0) * (sc.big_m * f.ln()).exp()).min(1.0))
}

/// High-noise approximation `(m−1) exp(−MκN_S/N_B)`, clamped to 1.
pub fn entangled_upper_bound_approx(sc: &RangingScenario) -> Result<f64> {
    if sc.n_b <= 0.0 {
        return Err(invalid("n_b", "approximation needs N_B > 0"));
    }
    Ok(((sc.m as f64 - 1.0) * (-sc.returned_photons() / sc.n_b).exp()).min(1.0))
}

/// Single-mode description of the coherent-state problem after passive
/// concentration: per slice, one mode carrying `|α|² = MκN_S` plus `M−1`
/// purely thermal modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentratedProbe {
    pub alpha_sq: f64,
    pub residual_thermal_modes: f64,
}

pub fn reduce_classical_to_single_mode(sc: &RangingScenario) -> ConcentratedProbe {
    ConcentratedProbe {
        alpha_sq: sc.returned_photons(),
        residual_thermal_modes: sc.big_m - 1.0,
    }
}

/// Fock-oracle error probabilities of the concentrated coherent-state
/// problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedOracle {
    /// Helstrom limit; two slices only.
    pub helstrom: Option<f64>,
    pub pgm: f64,
    /// Uhlmann fidelity of the two hypotheses; two slices only.
    pub fidelity: Option<f64>,
    pub trace_deficit: f64,
}

/// Largest joint dimension [`classical_fock_oracle`] will build.
pub const REDUCED_ORACLE_MAX_DIM: usize = 4096;

/// Hypothesis `h` displaces the signal mode of slice `h` by `α` on top of
/// thermal noise and leaves the other slices thermal. The residual
/// thermal modes are identical under every hypothesis and drop out.
pub fn classical_fock_oracle(sc: &RangingScenario, cutoff: usize) -> Result<ReducedOracle> {
    let dim = (cutoff as f64).powi(sc.m as i32);
    if cutoff < 2 || dim > REDUCED_ORACLE_MAX_DIM as f64 {
        return Err(invalid(
            "cutoff",
            format!("need 2 <= cutoff and cutoff^m <= {REDUCED_ORACLE_MAX_DIM}"),
        ));
    }
    let alpha = C64::new(sc.returned_photons().sqrt(), 0.0);
    let signal = displaced_thermal_dm(alpha, sc.n_b, cutoff)?;
    let idle = thermal_dm(sc.n_b, cutoff)?;
    let states: Vec<FockDensityMatrix> = (0..sc.m)
        .map(|h| {
            let mut st = if h == 0 { signal.clone() } else { idle.clone() };
            for slot in 1..sc.m {
                st = st.tensor(if slot == h { &signal } else { &idle });
            }
            st
        })
        .collect();
    let trace_deficit = states
        .iter()
        .map(FockDensityMatrix::trace_deficit)
        .fold(0.0, f64::max);
    let pgm = pgm_error(&states, &vec![sc.prior(); sc.m])?;
    let (helstrom, fidelity) = if sc.m == 2 {
        (
            Some(helstrom_binary(&states[0], &states[1], 0.5)?),
            Some(uhlmann_fidelity_fock(&states[0], &states[1])?),
        )
    } else {
        (None, None)
    };
    Ok(ReducedOracle {
        helstrom,
        pgm,
        fidelity,
        trace_deficit,
    })
}

/// Helstrom limit of `m` geometrically uniform pure states with real
/// pairwise overlap `ζ`: `((m−1)/m²)[√(1+(m−1)ζ) − √(1−ζ)]²`.
pub fn gus_helstrom(m: usize, zeta: f64) -> Result<f64> {
    if m < 2 {
        return Err(invalid("m", "need at least 2 states"));
    }
    check_unit_interval("zeta", zeta)?;
    let mf = m as f64;
    let d = (1.0 + (mf - 1.0) * zeta).sqrt() - (1.0 - zeta).sqrt();
    Ok((mf - 1.0) / (mf * mf) * d * d)
}

/// Small-overlap expansion `¼(m−1)ζ²`.
pub fn gus_helstrom_asymptotic(m: usize, zeta: f64) -> f64 {
    0.25 * (m as f64 - 1.0) * zeta * zeta
}

/// Noiseless pairwise overlaps `(ζ_E, ζ_C) = ((1+N_S)^{−M}, e^{−MN_S})`
/// for the entangled and coherent probes. The entangled overlap is never
/// smaller, so there is no advantage without background noise.
pub fn noiseless_overlaps(n_s: f64, big_m: f64) -> Result<(f64, f64)> {
    check_at_least("n_s", n_s, 0.0)?;
    check_at_least("big_m", big_m, 0.0)?;
    Ok(((-big_m * n_s.ln_1p()).exp(), (-big_m * n_s).exp()))
}

/// Every bound at one scenario point, with per-mode exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub p_c_qcb: f64,
    pub p_c_lb: f64,
    pub p_c_dd: f64,
    pub p_e_qcb_full: f64,
    pub p_e_qcb_asymptotic: Option<f64>,
    pub p_e_ub: f64,
    pub exp_c_qcb: f64,
    pub exp_c_lb: f64,
    /// Only defined for two slices, where the sum is a single exponential.
    pub exp_c_dd: Option<f64>,
    pub exp_e_qcb_full: f64,
    pub exp_e_qcb_asymptotic: Option<f64>,
    /// `−ln F` per mode.
    pub exp_e_ub: f64,
}

pub fn bounds_report(sc: &RangingScenario, passive_signature: bool) -> Result<BoundsReport> {
    let full = entangled_qcb_exponent(sc, passive_signature)?;
    let f = entangled_fidelity(sc, passive_signature)?;
    let asym = (sc.n_b > 0.0).then(|| 2.0 * sc.kappa * sc.n_s / sc.n_b);
    Ok(BoundsReport {
        p_c_qcb: classical_qcb(sc),
        p_c_lb: classical_lower_bound(sc),
        p_c_dd: classical_dd(sc)?,
        p_e_qcb_full: sc.guess_error() * (-sc.big_m * full.exponent).exp(),
        p_e_qcb_asymptotic: asym.map(|e| sc.guess_error() * (-sc.big_m * e).exp()),
        p_e_ub: ((sc.m as f64 - 1.0) * (sc.big_m * f.ln()).exp()).min(1.0),
        exp_c_qcb: classical_qcb_exponent(sc),
        exp_c_lb: classical_lower_bound_exponent(sc),
        exp_c_dd: (sc.m == 2).then(|| sc.kappa * sc.n_s / (2.0 * sc.n_b + 1.0)),
        exp_e_qcb_full: full.exponent,
        exp_e_qcb_asymptotic: asym,
        exp_e_ub: -f.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sc(m: usize, big_m: f64, n_s: f64, n_b: f64, kappa: f64) -> RangingScenario {
        RangingScenario::new(m, big_m, n_s, n_b, kappa).unwrap()
    }

    #[test]
    fn scenario_validation() {
        assert!(RangingScenario::new(1, 10.0, 1e-3, 1.0, 0.1).is_err());
        assert!(RangingScenario::new(2, 0.0, 1e-3, 1.0, 0.1).is_err());
        assert!(RangingScenario::new(2, 1.5, 1e-3, 1.0, 0.1).is_err());
        assert!(RangingScenario::new(2, 10.0, -1.0, 1.0, 0.1).is_err());
        assert!(RangingScenario::new(2, 10.0, 1e-3, 1.0, 1.1).is_err());
        let s = sc(4, 10.0, 1e-3, 1.0, 0.1);
        assert_eq!(s.prior() * 4.0, 1.0);
    }

    #[test]
    fn slice_times() {
        assert_eq!(slice_time(0, 10.0).unwrap(), 0.0);
        assert_eq!(slice_time(1, SPEED_OF_LIGHT / 2.0).unwrap(), 1.0);
        assert!((slice_time(1, 150.0).unwrap() - 1.000_692_3e-6).abs() < 1e-12);
    }

    #[test]
    fn classical_qcb_values() {
        assert_eq!(classical_qcb(&sc(3, 100.0, 1e-3, 1.0, 0.0)), 2.0 / 3.0);
        let p = classical_qcb(&sc(2, 1e4, 1e-3, 3.0, 0.01));
        assert!((p - 0.5 * (-0.014_359_4f64).exp()).abs() < 1e-7);
        assert!((p - 0.492_872).abs() < 1e-6);
        // N_B = 100: (1 + 2N_B + 2√(N_B² + N_B))/N_B
        let s = sc(2, 1.0, 1e-3, 100.0, 0.01);
        let ratio = (2.0 * s.kappa * s.n_s / s.n_b) / classical_qcb_exponent(&s);
        assert!((ratio - 4.019_98).abs() < 1e-5);
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(classical_lower_bound(&sc(2, 10.0, 1e-3, 3.0, 0.0)), 0.25);
        let p = classical_lower_bound(&sc(2, 35.0, 1.0, 3.0, 0.01));
        assert!((p - 0.25 * (-0.1f64).exp()).abs() < 1e-12);
        assert!((p - 0.226_209).abs() < 1e-6);
        let s = sc(2, 1.0, 1e-3, 1e6, 0.01);
        let ratio = classical_lower_bound_exponent(&s) / classical_qcb_exponent(&s);
        assert!((ratio - 2.0).abs() < 1e-5);
    }

    #[test]
    fn dd_two_slices() {
        let s = sc(2, 70.0, 1.0, 3.0, 0.01);
        let p = classical_dd(&s).unwrap();
        assert!((p - 0.5 * (-0.1f64).exp()).abs() < 1e-12);
        assert!((p - 0.452_419).abs() < 1e-6);
        for (big_m, n_b) in [(1.0, 0.1), (1e4, 3.0), (1e6, 100.0), (37.0, 1e-3)] {
            let s = sc(2, big_m, 1e-3, n_b, 0.01);
            assert!((classical_dd(&s).unwrap() - classical_dd_two_slice(&s)).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_oracle_noiseless_limit() {
        // N_B = 0: |α⟩|0⟩ against |0⟩|α⟩, amplitude overlap e^{-|α|²}
        let s = sc(2, 100.0, 1e-2, 0.0, 0.5);
        let r = classical_fock_oracle(&s, 20).unwrap();
        let z2 = (-2.0 * s.returned_photons()).exp();
        assert!((r.helstrom.unwrap() - 0.5 * (1.0 - (1.0 - z2).sqrt())).abs() < 1e-10);
        assert!((r.fidelity.unwrap() - (-s.returned_photons()).exp()).abs() < 1e-10);
        assert!(r.pgm >= r.helstrom.unwrap() - 1e-12);
        assert!(classical_fock_oracle(&sc(3, 10.0, 1e-2, 0.1, 0.5), 20).is_err());
    }

    #[test]
    fn dd_noiseless_and_degenerate() {
        let s = sc(5, 100.0, 1e-2, 0.0, 0.5);
        assert!((classical_dd(&s).unwrap() - 0.8 * (-0.5f64).exp()).abs() < 1e-15);
        let s = sc(50, 100.0, 1e-2, 20.0, 0.0);
        assert!((classical_dd(&s).unwrap() - 49.0 / 50.0).abs() < 1e-14);
    }

    #[test]
    fn dd_precision() {
        let s = sc(50, 1e6, 1e-3, 20.0, 0.01);
        let p256 = classical_dd(&s).unwrap();
        let p400 = classical_dd_with_precision(&s, 400).unwrap();
        assert!(((p256 - p400) / p400).abs() < 1e-14);
        assert!(p256 > 0.0 && p256 < 1.0);
        assert!(classical_dd_f64(&s).is_err());
        let small = sc(5, 1e4, 1e-3, 1.0, 0.01);
        assert!((classical_dd_f64(&small).unwrap() - classical_dd(&small).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dd_depends_only_on_returned_photons() {
        let a = sc(3, 1e4, 1e-3, 2.0, 0.01);
        let red = reduce_classical_to_single_mode(&a);
        let b = sc(3, 1.0, red.alpha_sq, 2.0, 1.0);
        assert!((classical_dd(&a).unwrap() - classical_dd(&b).unwrap()).abs() < 1e-14);
        assert_eq!(
            reduce_classical_to_single_mode(&sc(2, 1.0, 1e-3, 1.0, 0.5)).alpha_sq,
            5e-4
        );
        let r = reduce_classical_to_single_mode(&sc(2, 1e4, 1e-3, 1.0, 0.01));
        assert!((r.alpha_sq - 0.1).abs() < 1e-15);
        assert_eq!(r.residual_thermal_modes, 9999.0);
    }

    #[test]
    fn three_mode_covariances() {
        let (a, b) = build_three_mode_covariances(&sc(2, 1.0, 1e-3, 3.0, 0.01), false).unwrap();
        assert!((a.cov()[(0, 4)] - 0.006_327_72).abs() < 1e-8);
        assert!((a.cov()[(1, 5)] + 0.006_327_72).abs() < 1e-8);
        assert_eq!(a.cov()[(0, 0)], 7.0);
        assert_eq!(a.cov()[(2, 2)], 7.0);
        assert_eq!(a.cov()[(2, 4)], 0.0);
        assert!((b.cov()[(2, 4)] - 0.006_327_72).abs() < 1e-8);
        let (a, _) = build_three_mode_covariances(&sc(2, 1.0, 1e-3, 3.0, 0.01), true).unwrap();
        assert!((a.cov()[(0, 0)] - 7.000_02).abs() < 1e-12);
        assert_eq!(a.cov()[(2, 2)], 7.0);
        for passive in [false, true] {
            let (a, b) =
                build_three_mode_covariances(&sc(2, 1.0, 1e-3, 3.0, 0.0), passive).unwrap();
            assert_eq!(a.cov(), b.cov());
        }
    }

    #[test]
    fn entangled_bounds() {
        let s = sc(2, 1e4, 1e-3, 3.0, 0.01);
        assert!(
            (entangled_qcb_asymptotic(&s).unwrap() - 0.5 * (-1.0f64 / 15.0).exp()).abs() < 1e-12
        );
        assert!((entangled_qcb_asymptotic(&s).unwrap() - 0.467_753).abs() < 1e-6);
        assert!(entangled_qcb_asymptotic(&sc(2, 1.0, 1e-3, 0.0, 0.01)).is_err());
        let zero = sc(4, 1e4, 1e-3, 3.0, 0.0);
        assert!((entangled_qcb_full(&zero, false).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(entangled_upper_bound(&zero, false).unwrap(), 1.0);
        // high noise and weak signal: exponent close to 2κN_S/N_B
        let s = sc(2, 1.0, 1e-5, 1e3, 0.01);
        let c = entangled_qcb_exponent(&s, false).unwrap();
        let target = 2.0 * s.kappa * s.n_s / s.n_b;
        assert!(
            ((c.exponent - target) / target).abs() < 0.02,
            "{}",
            c.exponent / target
        );
        assert!((c.s_star - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_exponent_identities() {
        for n_b in [1.0, 10.0, 1e3] {
            let s = sc(2, 1.0, 1e-3, n_b, 0.01);
            let e_asym = 2.0 * s.kappa * s.n_s / n_b;
            let e_c_high = s.kappa * s.n_s / (2.0 * n_b);
            let e_ub = s.kappa * s.n_s / n_b;
            assert!((e_asym - 4.0 * e_c_high).abs() < 1e-18);
            assert!((e_asym - 2.0 * e_ub).abs() < 1e-18);
        }
    }

    #[test]
    fn gus_values() {
        assert_eq!(gus_helstrom(3, 0.0).unwrap(), 0.0);
        assert!((gus_helstrom(2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((gus_helstrom(2, 0.6).unwrap() - 0.1).abs() < 1e-15);
        assert!(gus_helstrom(2, 1.2).is_err());
        let z = 1e-4;
        assert!((gus_helstrom(5, z).unwrap() / gus_helstrom_asymptotic(5, z) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn noiseless() {
        assert_eq!(noiseless_overlaps(0.0, 10.0).unwrap(), (1.0, 1.0));
        let (e, c) = noiseless_overlaps(1e-6, 100.0).unwrap();
        assert!((e - c).abs() < 1e-9);
        let (e, c) = noiseless_overlaps(0.1, 100.0).unwrap();
        assert!(e > c);
    }

    #[test]
    fn report_fields_are_probabilities() {
        for m in [2, 3, 50] {
            let r = bounds_report(&sc(m, 1e5, 1e-3, 3.0, 0.01), false).unwrap();
            for p in [
                r.p_c_qcb,
                r.p_c_lb,
                r.p_c_dd,
                r.p_e_qcb_full,
                r.p_e_qcb_asymptotic.unwrap(),
                r.p_e_ub,
            ] {
                assert!((0.0..=1.0).contains(&p), "{p}");
            }
        }
    }

    #[test]
    fn entangled_exponent_monotone() {
        let base = |n_s: f64, n_b: f64, kappa: f64| {
            entangled_qcb_exponent(&sc(2, 1.0, n_s, n_b, kappa), false)
                .unwrap()
                .exponent
        };
        let nbs = [0.1, 0.5, 1.0, 5.0, 20.0];
        for w in nbs.windows(2) {
            assert!(base(1e-3, w[1], 0.01) <= base(1e-3, w[0], 0.01) + 1e-15);
        }
        let ks = [0.001, 0.01, 0.1, 0.5];
        for w in ks.windows(2) {
            assert!(base(1e-3, 1.0, w[1]) >= base(1e-3, 1.0, w[0]) - 1e-15);
        }
        let ns = [1e-4, 1e-3, 1e-2, 0.1];
        for w in ns.windows(2) {
            assert!(base(w[1], 1.0, 0.01) >= base(w[0], 1.0, 0.01) - 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gus_matches_binary_pure_helstrom(zeta in 0.0f64..=1.0) {
            let expected = (1.0 - (1.0 - zeta * zeta).sqrt()) / 2.0;
            prop_assert!((gus_helstrom(2, zeta).unwrap() - expected).abs() < 1e-12);
        }

        #[test]
        fn dd_two_slice_reduction(big_m in 1.0f64..1e6, n_b in 0.0f64..200.0, kappa in 0.0f64..1.0) {
            let s = sc(2, big_m.round(), 1e-3, n_b, kappa);
            prop_assert!((classical_dd(&s).unwrap() - classical_dd_two_slice(&s)).abs() < 1e-12);
        }
    }
}

//! Analytic-versus-oracle self-test suite.
//!
//! Each check reports the largest deviation it measured next to its
//! tolerance, so a failing run says by how much it failed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::comm::mutual_info_ppm;
use crate::distinguishability::{gaussian_fidelity_zero_mean, gaussian_overlap};
use crate::fock::{
    coherent_vector, pgm_error, standard_form_parameters, thermal_cutoff, FockDensityMatrix,
    FockOverlap, GaussianProgram, ProgramOp, C64,
};
use crate::gaussian::{
    beamsplitter_matrix, phase_shift_matrix, two_mode_squeezer_matrix, SymplecticForm,
};
use crate::ranging::{
    classical_dd, classical_dd_two_slice, classical_fock_oracle, gus_helstrom, RangingScenario,
};
use crate::receivers::{dd_monte_carlo, OpaConfig};
use crate::{Error, Result};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest measured deviation (units depend on the check).
    pub deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn within(
        name: impl Into<String>,
        deviation: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed: deviation <= tolerance,
            deviation,
            tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: false,
            deviation: f64::NAN,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }
}

/// Knobs of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub one_mode_pairs: usize,
    pub two_mode_pairs: usize,
    /// Largest accepted truncation loss.
    pub deficit_bound: f64,
    /// Fixed per-mode cutoff instead of adaptive growth.
    pub cutoff: Option<usize>,
    pub mc_trials: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_611,
            one_mode_pairs: 70,
            two_mode_pairs: 30,
            deficit_bound: 1e-10,
            cutoff: None,
            mc_trials: 1_000_000,
        }
    }
}

/// Overlap exponents sampled in the oracle comparison.
pub const OVERLAP_S_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
/// Agreement required between analytic and oracle values.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

/// Nonzero thermal occupations are drawn from these ranges. The oracle
/// drops eigenvalues below 1e-14, while `Q_s` at `s` near 0 or 1 still
/// picks up `λˢ μ^{1−s}` from them; weakly populated mixed modes put the
/// most weight there, so occupations are either exactly zero (those
/// eigenvalues vanish) or large enough that the dropped tail stays
/// below 1e-7.
pub const ONE_MODE_OCCUPATION: std::ops::Range<f64> = 0.3..0.6;
pub const TWO_MODE_OCCUPATION: std::ops::Range<f64> = 0.25..0.35;

fn occupation(rng: &mut ChaCha8Rng, range: std::ops::Range<f64>) -> f64 {
    if rng.random_bool(0.25) {
        0.0
    } else {
        rng.random_range(range)
    }
}

fn displacement(rng: &mut ChaCha8Rng, mode: usize, max_sq: f64) -> ProgramOp {
    let amp = rng.random_range(0.0..max_sq).sqrt();
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    ProgramOp::Displace {
        mode,
        re: amp * phi.cos(),
        im: amp * phi.sin(),
    }
}

fn one_mode_program(rng: &mut ChaCha8Rng) -> Result<GaussianProgram> {
    let n = occupation(rng, ONE_MODE_OCCUPATION);
    GaussianProgram::new(vec![n])?.then(displacement(rng, 0, 0.25))
}

/// Mean photon number per mode kept low enough for ~20-level cutoffs.
const TWO_MODE_PHOTON_CAP: f64 = 0.5;

fn two_mode_program(rng: &mut ChaCha8Rng) -> Result<GaussianProgram> {
    loop {
        let occ = vec![
            occupation(rng, TWO_MODE_OCCUPATION),
            occupation(rng, TWO_MODE_OCCUPATION),
        ];
        let prog = GaussianProgram::new(occ)?
            .then(ProgramOp::Squeeze {
                i: 0,
                j: 1,
                gain: rng.random_range(1.0..1.05),
            })?
            .then(ProgramOp::Beamsplitter {
                i: 0,
                j: 1,
                tau: rng.random_range(0.0..1.0),
            })?
            .then(ProgramOp::Phase {
                mode: 1,
                theta: rng.random_range(0.0..std::f64::consts::TAU),
            })?
            .then(displacement(rng, 0, 0.05))?
            .then(displacement(rng, 1, 0.05))?;
        let g = prog.to_gaussian()?;
        if (0..2).all(|k| g.mean_photon(k).is_ok_and(|n| n <= TWO_MODE_PHOTON_CAP)) {
            return Ok(prog);
        }
    }
}

/// Both programs on a shared truncated space, with cutoffs grown jointly
/// until both truncation losses are below the bound.
fn fock_pair(
    a: &GaussianProgram,
    b: &GaussianProgram,
    cfg: &SuiteConfig,
) -> Result<(FockDensityMatrix, FockDensityMatrix)> {
    if let Some(c) = cfg.cutoff {
        let cut = vec![c; a.n_modes()];
        return Ok((a.to_fock(&cut)?, b.to_fock(&cut)?));
    }
    let (ga, gb) = (a.to_gaussian()?, b.to_gaussian()?);
    let mut cut = Vec::with_capacity(a.n_modes());
    for k in 0..a.n_modes() {
        let n = ga.mean_photon(k)?.max(gb.mean_photon(k)?);
        // displaced and squeezed marginals have heavier tails than thermal ones
        cut.push(thermal_cutoff(n, cfg.deficit_bound * 1e-3));
    }
    loop {
        let (fa, fb) = (a.to_fock(&cut)?, b.to_fock(&cut)?);
        let deficit = fa.trace_deficit().max(fb.trace_deficit());
        if deficit < cfg.deficit_bound {
            return Ok((fa, fb));
        }
        for c in cut.iter_mut() {
            *c += (*c / 4).max(2);
        }
        if cut.iter().product::<usize>() > MAX_PAIR_DIM {
            return Err(Error::CutoffTooSmall {
                deficit,
                bound: cfg.deficit_bound,
            });
        }
    }
}

/// Largest Hilbert-space dimension tried for one pair.
const MAX_PAIR_DIM: usize = 2048;

#[derive(Default)]
struct Tally {
    pairs: usize,
    max_dev: f64,
    max_deficit: f64,
}

impl Tally {
    fn record(&mut self, dev: f64, fa: &FockDensityMatrix, fb: &FockDensityMatrix) {
        self.max_dev = self.max_dev.max(dev);
        self.max_deficit = self
            .max_deficit
            .max(fa.trace_deficit())
            .max(fb.trace_deficit());
    }

    fn into_check(self, name: &str, bound: f64) -> Check {
        let mut c = Check::within(
            name,
            self.max_dev,
            ORACLE_TOLERANCE,
            format!(
                "{} pairs, max trace deficit {:.2e}",
                self.pairs, self.max_deficit
            ),
        );
        if !(self.max_deficit < bound) {
            c.passed = false;
            c.detail = format!(
                "trace deficit {:.2e} exceeds bound {bound:.0e}; {}",
                self.max_deficit, c.detail
            );
        }
        c
    }
}

/// Random one- and two-mode Gaussian pairs: analytic `Q_s` against the
/// Fock oracle on `s ∈ {0.1, …, 0.9}`, and the zero-mean fidelity against
/// the Uhlmann oracle on the same pairs with displacements removed.
pub fn oracle_ensemble(cfg: &SuiteConfig) -> Result<(Check, Check)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut overlaps = Tally::default();
    let mut fidelities = Tally::default();
    let total = cfg.one_mode_pairs + cfg.two_mode_pairs;
    for k in 0..total {
        let (pa, pb) = if k < cfg.one_mode_pairs {
            (one_mode_program(&mut rng)?, one_mode_program(&mut rng)?)
        } else {
            (two_mode_program(&mut rng)?, two_mode_program(&mut rng)?)
        };
        let (ga, gb) = (pa.to_gaussian()?, pb.to_gaussian()?);
        let (fa, fb) = fock_pair(&pa, &pb, cfg)?;
        let oracle = FockOverlap::new(&fa, &fb)?;
        let mut dev = 0.0f64;
        for s in OVERLAP_S_GRID {
            dev = dev.max((gaussian_overlap(&ga, &gb, s)? - oracle.overlap(s)?).abs());
        }
        overlaps.pairs += 1;
        overlaps.record(dev, &fa, &fb);

        let (za, zb) = (pa.without_displacements(), pb.without_displacements());
        let (fa, fb) = fock_pair(&za, &zb, cfg)?;
        let analytic = gaussian_fidelity_zero_mean(&za.to_gaussian()?, &zb.to_gaussian()?)?;
        let oracle = FockOverlap::new(&fa, &fb)?.fidelity();
        fidelities.pairs += 1;
        fidelities.record((analytic - oracle).abs(), &fa, &fb);
    }
    Ok((
        overlaps.into_check("overlap vs Fock oracle", cfg.deficit_bound),
        fidelities.into_check("fidelity vs Fock oracle", cfg.deficit_bound),
    ))
}

/// The three-mode return/return/idler pair at `N_S = 10⁻³`, `κ = 0.01`,
/// `N_B = 0.2`, built on the Fock side as thermal modes and one squeezer.
pub fn three_mode_fidelity(cfg: &SuiteConfig) -> Result<Check> {
    let (n_s, kappa, n_b) = (1e-3, 0.01, 0.2);
    let sc = RangingScenario::new(2, 1.0, n_s, n_b, kappa)?;
    let (a, b) = crate::ranging::build_three_mode_covariances(&sc, false)?;
    let analytic = gaussian_fidelity_zero_mean(&a, &b)?;
    let cross = 2.0 * (kappa * n_s * (n_s + 1.0)).sqrt();
    let sf = standard_form_parameters(2.0 * n_b + 1.0, 2.0 * n_s + 1.0, cross)?;
    let pa = GaussianProgram::new(vec![sf.n1, n_b, sf.n2])?.then(ProgramOp::Squeeze {
        i: 0,
        j: 2,
        gain: sf.gain,
    })?;
    let pb = GaussianProgram::new(vec![n_b, sf.n1, sf.n2])?.then(ProgramOp::Squeeze {
        i: 1,
        j: 2,
        gain: sf.gain,
    })?;
    let (fa, fb) = fock_pair(&pa, &pb, cfg)?;
    let oracle = FockOverlap::new(&fa, &fb)?.fidelity();
    let mut tally = Tally {
        pairs: 1,
        ..Tally::default()
    };
    tally.record((analytic - oracle).abs(), &fa, &fb);
    let mut check = tally.into_check("three-mode fidelity vs Fock oracle", cfg.deficit_bound);
    check.detail = format!("cutoffs {:?}; {}", fa.cutoffs(), check.detail);
    Ok(check)
}

/// Operating points `(m, MκN_S, N_B)` with direct-detection error in
/// `[0.1, 0.4]`.
pub const DD_OPERATING_POINTS: [(usize, f64, f64); 4] =
    [(2, 1.5, 1.0), (2, 2.0, 0.3), (3, 2.0, 1.0), (3, 5.0, 2.0)];

/// Direct detection: Monte Carlo against the closed form, the two-slice
/// reduction, and the high-noise exponent.
pub fn direct_detection_checks(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut worst_z = 0.0f64;
    let mut detail = Vec::new();
    for (i, &(m, returned, n_b)) in DD_OPERATING_POINTS.iter().enumerate() {
        let (big_m, kappa) = (1e4, 0.01);
        let sc = RangingScenario::new(m, big_m, returned / (big_m * kappa), n_b, kappa)?;
        let exact = classical_dd(&sc)?;
        let mc = dd_monte_carlo(&sc, cfg.mc_trials, cfg.seed.wrapping_add(i as u64))?;
        let z = (mc.error - exact).abs() / mc.std_err;
        worst_z = worst_z.max(z);
        detail.push(format!(
            "m={m}: {exact:.5} vs {:.5}±{:.5}",
            mc.error, mc.std_err
        ));
    }
    checks.push(Check::within(
        "direct detection Monte Carlo (std errors)",
        worst_z,
        3.0,
        detail.join("; "),
    ));

    let mut worst = 0.0f64;
    for big_m in [1.0, 10.0, 1e3, 1e5, 1e7] {
        for n_b in [0.0, 0.1, 3.0, 100.0] {
            let sc = RangingScenario::new(2, big_m, 1e-3, n_b, 0.01)?;
            worst = worst.max((classical_dd(&sc)? - classical_dd_two_slice(&sc)).abs());
        }
    }
    checks.push(Check::within(
        "direct detection two-slice reduction",
        worst,
        1e-12,
        "",
    ));

    let n_b = 100.0;
    let base = RangingScenario::new(2, 1.0, 1e-3, n_b, 0.01)?;
    let ms: Vec<f64> = (0..=8)
        .map(|k| 10f64.powf(6.0 + 0.25 * k as f64).round())
        .collect();
    let ys: Vec<f64> = ms
        .iter()
        .map(|&m| classical_dd(&base.with_big_m(m)?).map(|p| -p.ln()))
        .collect::<Result<_>>()?;
    let slope = fit_slope(&ms, &ys);
    let target = base.kappa * base.n_s / (2.0 * n_b);
    let rel = (slope / target - 1.0).abs();
    checks.push(Check::within(
        "direct detection high-noise exponent (relative)",
        rel,
        0.05,
        format!("fitted/expected = {:.5}", slope / target),
    ));
    Ok(checks)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Cascade identities, mutual-information endpoints and symplecticity of
/// the gate matrices.
pub fn structural_checks(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let cfg = OpaConfig::new(rng.random_range(1..=64), rng.random_range(1.0..50.0))?;
        let (prod, level) = cfg.invariant_defects();
        worst = worst.max(prod).max(level);
    }
    let mut checks = vec![Check::within(
        "OPA cascade identities",
        worst,
        1e-12,
        "500 random (G, m)",
    )];

    let mut worst = 0.0f64;
    for m in 2..=256 {
        let mf = m as f64;
        worst = worst.max((mutual_info_ppm(0.0, m)? - mf.log2()).abs());
        worst = worst.max(mutual_info_ppm((mf - 1.0) / mf, m)?.abs());
    }
    checks.push(Check::within(
        "mutual information endpoints",
        worst,
        0.0,
        "m = 2..256",
    ));

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=5);
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let form = SymplecticForm::new(n);
        for s in [
            beamsplitter_matrix(n, i, j, rng.random_range(0.0..=1.0))?,
            two_mode_squeezer_matrix(n, i, j, rng.random_range(1.0..20.0))?,
            phase_shift_matrix(n, i, rng.random_range(-10.0..10.0))?,
        ] {
            worst = worst.max(form.symplectic_defect(&s));
        }
    }
    checks.push(Check::within(
        "symplectic gate matrices",
        worst,
        1e-10,
        "600 random gates",
    ));
    Ok(checks)
}

/// Three symmetric coherent-state pairs `|αωʰ⟩|αω⁻ʰ⟩`, `ω = e^{2πi/3}`,
/// whose pairwise overlap is the real number `ζ = e^{−3|α|²}`: the
/// oracle's PGM error against the closed-form Helstrom limit.
pub fn gus_pgm_check(zetas: &[f64], deficit_bound: f64) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut worst_deficit = 0.0f64;
    let mut cutoffs = Vec::new();
    for &zeta in zetas {
        let amp = (-zeta.ln() / 3.0).sqrt();
        let mut cutoff = 4;
        let states = loop {
            let states: Vec<FockDensityMatrix> = (0..3)
                .map(|h| {
                    let phase = std::f64::consts::TAU * h as f64 / 3.0;
                    let a = coherent_vector(C64::from_polar(amp, phase), cutoff)?.to_density();
                    let b = coherent_vector(C64::from_polar(amp, -phase), cutoff)?.to_density();
                    Ok(a.tensor(&b))
                })
                .collect::<Result<_>>()?;
            if states.iter().all(|s| s.trace_deficit() < deficit_bound) {
                break states;
            }
            cutoff += 1;
        };
        cutoffs.push(cutoff);
        worst_deficit = worst_deficit.max(
            states
                .iter()
                .map(FockDensityMatrix::trace_deficit)
                .fold(0.0, f64::max),
        );
        let pgm = pgm_error(&states, &[1.0 / 3.0; 3])?;
        worst = worst.max((pgm - gus_helstrom(3, zeta)?).abs());
    }
    Ok(Check::within(
        "PGM on symmetric coherent states vs closed form",
        worst,
        1e-8,
        format!("cutoffs {cutoffs:?}, max trace deficit {worst_deficit:.1e}"),
    ))
}

/// The oracle Helstrom error of the two-slice concentrated problem lies
/// between the fidelity bounds `(1 − √(1−F²))/2` and `F/2`.
pub fn helstrom_sandwich_check(returned: &[f64], n_b: f64, cutoff: usize) -> Result<Check> {
    let mut worst = f64::NEG_INFINITY;
    let mut detail = Vec::new();
    for &x in returned {
        let (big_m, kappa) = (1e4, 0.01);
        let sc = RangingScenario::new(2, big_m, x / (big_m * kappa), n_b, kappa)?;
        let r = classical_fock_oracle(&sc, cutoff)?;
        let (p, f) = (
            r.helstrom.unwrap_or(f64::NAN),
            r.fidelity.unwrap_or(f64::NAN),
        );
        let (lo, hi) = (0.5 * (1.0 - (1.0 - f * f).max(0.0).sqrt()), 0.5 * f);
        // positive when outside [lo, hi]
        worst = worst.max(lo - p).max(p - hi);
        detail.push(format!(
            "{lo:.6} <= {p:.6} <= {hi:.6} (deficit {:.1e})",
            r.trace_deficit
        ));
    }
    let mut c = Check::within(
        "Helstrom within fidelity bounds",
        worst,
        0.0,
        detail.join("; "),
    );
    c.passed = worst <= 0.0;
    Ok(c)
}

fn capture(name: &str, r: Result<Vec<Check>>) -> Vec<Check> {
    r.unwrap_or_else(|e| vec![Check::failed(name, e.to_string())])
}

/// The full self-test: oracle equivalence for overlaps and fidelities,
/// direct detection, and the structural invariants.
pub fn run_selftest(cfg: &SuiteConfig) -> Vec<Check> {
    let mut out = capture(
        "oracle ensemble",
        oracle_ensemble(cfg).map(|(a, b)| vec![a, b]),
    );
    out.extend(capture(
        "three-mode fidelity",
        three_mode_fidelity(cfg).map(|c| vec![c]),
    ));
    out.extend(capture("direct detection", direct_detection_checks(cfg)));
    out.extend(capture("structural invariants", structural_checks(cfg)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteConfig {
        SuiteConfig {
            one_mode_pairs: 3,
            two_mode_pairs: 1,
            mc_trials: 20_000,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn small_ensemble_passes() {
        let (ov, fid) = oracle_ensemble(&small()).unwrap();
        assert!(ov.passed, "{ov:?}");
        assert!(fid.passed, "{fid:?}");
    }

    #[test]
    fn low_cutoff_is_reported() {
        let cfg = SuiteConfig {
            cutoff: Some(3),
            ..small()
        };
        let (ov, _) = oracle_ensemble(&cfg).unwrap();
        assert!(!ov.passed);
        assert!(ov.detail.contains("trace deficit"), "{}", ov.detail);
    }

    #[test]
    fn structural_suite_passes() {
        for c in structural_checks(&small()).unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn gus_and_sandwich() {
        assert!(gus_pgm_check(&[0.5], 1e-12).unwrap().passed);
        let c = helstrom_sandwich_check(&[0.5], 0.3, 20).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn slope_fit() {
        assert!((fit_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
    }
}

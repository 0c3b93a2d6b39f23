//! Photon-counting receivers.
//!
//! The m-OPA receiver phase-shifts each returned mode, squeezes it against
//! the idler through a cascade of two-mode squeezers, and counts photons on
//! the idler output. The net effect is a single squeezer of gain `G` acting
//! on the idler and an equal-weight combination of all returns, so the
//! count is negative-binomial with a mean that depends on the phase of the
//! slice holding the target.
//!
//! Direct detection of a coherent-state probe is simulated on the
//! concentrated single-mode description of each slice.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Geometric, Normal, Poisson};
use rayon::prelude::*;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_at_least, invalid, Error, Result};
use crate::gaussian::{thermal_state, two_mode_block, GaussianState};
use crate::ranging::RangingScenario;
use nalgebra::DVector;

/// Trials per Monte Carlo work unit; each unit owns one random stream.
pub const MC_CHUNK: u64 = 65_536;

/// Tail sums stop once a term falls below this fraction of the running sum.
const TAIL_REL: f64 = 1e-18;

/// Cutoff on `n` above which `ln C(n+M−1, n)` switches from an explicit
/// sum to log-gamma differences.
const LN_BINOMIAL_SUM_MAX: u64 = 1_000_000;

/// Gain `G = 1 + m√N_S / N_B`.
pub fn default_gain(sc: &RangingScenario) -> Result<f64> {
    if sc.n_b <= 0.0 {
        return Err(invalid("n_b", "the OPA gain diverges at N_B = 0"));
    }
    Ok(1.0 + sc.m as f64 * sc.n_s.sqrt() / sc.n_b)
}

/// Per-stage gains of the squeezer cascade so that each return enters the
/// idler output with weight `(G−1)/m`: `G_m = 1 + (G−1)/m` and
/// `G_ℓ = 1 + (G−1)/(m Π_{k>ℓ} G_k)`.
pub fn cascade_gains(gain: f64, m: usize) -> Result<Vec<f64>> {
    check_at_least("gain", gain, 1.0)?;
    if m == 0 {
        return Err(invalid("m", "need at least one stage"));
    }
    let share = (gain - 1.0) / m as f64;
    let mut gains = vec![0.0; m];
    let mut tail = 1.0;
    for l in (0..m).rev() {
        gains[l] = 1.0 + share / tail;
        tail *= gains[l];
    }
    Ok(gains)
}

/// Receiver settings. The total gain is split into cascade stages; each
/// slice carries its own phase.
#[derive(Debug, Clone, PartialEq)]
pub struct OpaConfig {
    pub m: usize,
    pub gain: f64,
    pub cascade_gains: Vec<f64>,
    pub phases: Vec<f64>,
}

impl OpaConfig {
    /// Cascade for gain `G` with phases `θ_ℓ = 2πℓ/m` (so `(0, π)` for two
    /// slices).
    pub fn new(m: usize, gain: f64) -> Result<Self> {
        let phases = (0..m).map(|l| 2.0 * PI * l as f64 / m as f64).collect();
        Self::with_phases(gain, phases)
    }

    pub fn with_phases(gain: f64, phases: Vec<f64>) -> Result<Self> {
        if phases.iter().any(|t| !t.is_finite()) {
            return Err(invalid("phases", "must be finite"));
        }
        let m = phases.len();
        Ok(Self {
            m,
            gain,
            cascade_gains: cascade_gains(gain, m)?,
            phases,
        })
    }

    /// `|Π G_ℓ − G|` and the largest `|(G_ℓ−1) Π_{k>ℓ} G_k − (G−1)/m|`.
    pub fn invariant_defects(&self) -> (f64, f64) {
        let share = (self.gain - 1.0) / self.m as f64;
        let mut tail = 1.0;
        let mut worst = 0.0f64;
        for g in self.cascade_gains.iter().rev() {
            worst = worst.max(((g - 1.0) * tail - share).abs());
            tail *= g;
        }
        ((tail - self.gain).abs(), worst)
    }

    /// Squared Bogoliubov weight of each return's creation operator on the
    /// idler output, composed stage by stage.
    pub fn return_weights(&self) -> Vec<f64> {
        let mut weights = vec![0.0; self.m];
        let mut tail = 1.0;
        for l in (0..self.m).rev() {
            weights[l] = (self.cascade_gains[l] - 1.0) * tail;
            tail *= self.cascade_gains[l];
        }
        weights
    }
}

/// Idler-output mean photon number when the target sits in a slice whose
/// applied phase is `θ_h`:
/// `G N_S + (G−1)(N_B+1) + 2√(G(G−1)κ/m) cos θ_h · C_p`.
pub fn conditional_mean_photon(sc: &RangingScenario, gain: f64, theta_h: f64) -> Result<f64> {
    check_at_least("gain", gain, 1.0)?;
    let c_p = (sc.n_s * (sc.n_s + 1.0)).sqrt();
    let m = sc.m as f64;
    Ok(gain * sc.n_s
        + (gain - 1.0) * (sc.n_b + 1.0)
        + 2.0 * (gain * (gain - 1.0) * sc.kappa / m).sqrt() * theta_h.cos() * c_p)
}

/// The same mean obtained by propagating covariance matrices through
/// per-slice phase shifts and the squeezer cascade.
pub fn pipeline_mean_photon(
    sc: &RangingScenario,
    config: &OpaConfig,
    target: usize,
) -> Result<f64> {
    if config.m != sc.m {
        return Err(Error::DimensionMismatch {
            expected: sc.m,
            found: config.m,
        });
    }
    if target >= sc.m {
        return Err(Error::ModeOutOfRange {
            index: target,
            n_modes: sc.m,
        });
    }
    let idler = sc.m;
    let mut st = thermal_state(sc.n_b, sc.m)?.tensor(&thermal_state(sc.n_s, 1)?);
    let cross = 2.0 * (sc.kappa * sc.n_s * (sc.n_s + 1.0)).sqrt();
    let block = two_mode_block(2.0 * sc.n_b + 1.0, 2.0 * sc.n_s + 1.0, cross);
    let mut cov = st.cov().clone();
    for (bi, mi) in [target, idler].into_iter().enumerate() {
        for (bj, mj) in [target, idler].into_iter().enumerate() {
            cov.view_mut((2 * mi, 2 * mj), (2, 2))
                .copy_from(&block.view((2 * bi, 2 * bj), (2, 2)));
        }
    }
    st = GaussianState::new(DVector::zeros(2 * (sc.m + 1)), cov)?;
    for (l, &theta) in config.phases.iter().enumerate() {
        st = st.phase_shift(l, -theta)?;
    }
    for (l, &g) in config.cascade_gains.iter().enumerate() {
        st = st.two_mode_squeeze(idler, l, g)?;
    }
    st.mean_photon(idler)
}

/// Negative-binomial count statistics of `M` independent thermal-like
/// copies with `N̄` photons each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountModel {
    pub big_m: f64,
    pub n_bar: f64,
}

impl CountModel {
    pub fn new(big_m: f64, n_bar: f64) -> Result<Self> {
        if !(big_m >= 1.0 && big_m.is_finite()) {
            return Err(invalid("big_m", "must be at least 1"));
        }
        check_at_least("n_bar", n_bar, 0.0)?;
        Ok(Self { big_m, n_bar })
    }

    /// Per-copy standard deviation `√(N̄(N̄+1))`.
    pub fn sigma_bar(&self) -> f64 {
        (self.n_bar * (self.n_bar + 1.0)).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.big_m * self.n_bar
    }

    pub fn variance(&self) -> f64 {
        self.big_m * self.n_bar * (self.n_bar + 1.0)
    }

    /// Most likely count, `⌊(M−1)N̄⌋`.
    pub fn mode(&self) -> u64 {
        ((self.big_m - 1.0) * self.n_bar).floor().max(0.0) as u64
    }

    /// `ln P(n) = ln C(n+M−1, n) + n ln(N̄/(1+N̄)) − M ln(1+N̄)`.
    pub fn ln_pmf(&self, n: u64) -> f64 {
        let tail = -self.big_m * self.n_bar.ln_1p();
        if n == 0 {
            return tail;
        }
        if self.n_bar == 0.0 {
            return f64::NEG_INFINITY;
        }
        let ln_binom = if n <= LN_BINOMIAL_SUM_MAX {
            let a = self.big_m - 1.0;
            (1..=n).map(|j| (a / j as f64).ln_1p()).sum::<f64>()
        } else {
            let nf = n as f64;
            ln_gamma(nf + self.big_m) - ln_gamma(nf + 1.0) - ln_gamma(self.big_m)
        };
        ln_binom + n as f64 * (self.n_bar / (1.0 + self.n_bar)).ln() + tail
    }

    /// `P(n+1)/P(n)`.
    fn up_ratio(&self, n: u64) -> f64 {
        (n as f64 + self.big_m) / (n as f64 + 1.0) * self.n_bar / (1.0 + self.n_bar)
    }

    /// `P(n < k)`.
    pub fn cdf_below(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        if k - 1 > self.mode() {
            return (1.0 - self.tail_from(k)).max(0.0);
        }
        let mut n = k - 1;
        let mut term = self.ln_pmf(n).exp();
        let mut total = 0.0;
        loop {
            total += term;
            if n == 0 || term <= TAIL_REL * total {
                return total.min(1.0);
            }
            term /= self.up_ratio(n - 1);
            n -= 1;
        }
    }

    /// `P(n ≥ k)`.
    pub fn tail_from(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if k <= self.mode() {
            return (1.0 - self.cdf_below(k)).max(0.0);
        }
        let mut n = k;
        let mut term = self.ln_pmf(n).exp();
        let mut total = 0.0;
        while term > 0.0 {
            total += term;
            if term < TAIL_REL * total {
                break;
            }
            term *= self.up_ratio(n);
            n += 1;
        }
        total.min(1.0)
    }
}

/// `P(n)` for the negative-binomial count model.
pub fn count_pmf(n: u64, model: &CountModel) -> f64 {
    model.ln_pmf(n).exp()
}

/// Conditional means `(N̄(0), N̄(π))` of the two-slice receiver.
pub fn two_slice_means(sc: &RangingScenario, gain: f64) -> Result<(f64, f64)> {
    if sc.m != 2 {
        return Err(Error::NotImplemented("adaptive receiver"));
    }
    Ok((
        conditional_mean_photon(sc, gain, 0.0)?,
        conditional_mean_photon(sc, gain, PI)?,
    ))
}

/// Smallest count at which the likelihood of the larger-mean hypothesis is
/// at least that of the smaller; equal likelihoods go to the larger mean.
pub fn ml_threshold(big_m: f64, high: f64, low: f64) -> Result<u64> {
    if !(high > low) {
        return Err(invalid("means", "need a strictly larger first mean"));
    }
    let h = CountModel::new(big_m, high)?;
    let l = CountModel::new(big_m, low)?;
    let slope = (high / (1.0 + high)).ln()
        - if low > 0.0 {
            (low / (1.0 + low)).ln()
        } else {
            f64::NEG_INFINITY
        };
    let offset = big_m * ((high - low) / (1.0 + low)).ln_1p();
    let guess = if slope.is_infinite() {
        1.0
    } else {
        (offset / slope).ceil().max(0.0)
    };
    let mut n = guess as u64;
    let prefers_high = |n: u64| h.ln_pmf(n) >= l.ln_pmf(n);
    while n > 0 && prefers_high(n - 1) {
        n -= 1;
    }
    while !prefers_high(n) {
        n += 1;
    }
    Ok(n)
}

/// Exact two-slice OPA error with the maximum-likelihood threshold on the
/// idler count: `½[P(n < n*|θ=0) + P(n ≥ n*|θ=π)]`.
pub fn opa_error_exact_m2(sc: &RangingScenario, gain: f64) -> Result<f64> {
    if sc.n_b <= 0.0 {
        return Err(invalid("n_b", "the OPA receiver needs N_B > 0"));
    }
    let (n0, npi) = two_slice_means(sc, gain)?;
    if n0 == npi {
        return Ok(0.5);
    }
    let (high, low) = if n0 > npi { (n0, npi) } else { (npi, n0) };
    let t = ml_threshold(sc.big_m, high, low)?;
    let miss = CountModel::new(sc.big_m, high)?.cdf_below(t);
    let false_alarm = CountModel::new(sc.big_m, low)?.tail_from(t);
    Ok(0.5 * (miss + false_alarm))
}

/// Gaussian approximation `½ erfc[√(M/2) (N̄(0) − N̄(π)) / (σ̄(0) + σ̄(π))]`.
pub fn opa_error_gaussian_m2(sc: &RangingScenario, gain: f64) -> Result<f64> {
    let (n0, npi) = two_slice_means(sc, gain)?;
    let s0 = CountModel::new(sc.big_m, n0)?.sigma_bar();
    let spi = CountModel::new(sc.big_m, npi)?.sigma_bar();
    if s0 + spi == 0.0 {
        return Ok(if n0 == npi { 0.5 } else { 0.0 });
    }
    Ok(0.5 * erfc((sc.big_m / 2.0).sqrt() * (n0 - npi).abs() / (s0 + spi)))
}

/// OPA error for any `m`; only the two-slice decision rule exists.
pub fn opa_error_exact(sc: &RangingScenario, gain: f64) -> Result<f64> {
    if sc.m != 2 {
        return Err(Error::NotImplemented("adaptive receiver"));
    }
    opa_error_exact_m2(sc, gain)
}

/// Monte Carlo error frequency and its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub error: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl McEstimate {
    fn from_counts(errors: u64, trials: u64) -> Self {
        let p = errors as f64 / trials as f64;
        Self {
            error: p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }
}

/// Runs `trials` Bernoulli error indicators in chunks of [`MC_CHUNK`];
/// chunk `c` draws from stream `c` of a ChaCha8 generator seeded by `seed`,
/// so the result does not depend on how chunks are spread over threads.
fn run_chunks<F>(trials: u64, seed: u64, trial: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let chunks = trials.div_ceil(MC_CHUNK);
    let errors: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = MC_CHUNK.min(trials - c * MC_CHUNK);
            (0..n).filter(|_| trial(&mut rng)).count() as u64
        })
        .sum();
    Ok(McEstimate::from_counts(errors, trials))
}

fn sample_poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}

/// Direct detection of a coherent probe, simulated on the concentrated
/// description: each slice is one mode, the target slice holds a displaced
/// thermal state with `|α|² = MκN_S` and `N_B` noise photons, the others
/// hold thermal states. Counts of the target slice are drawn as
/// `Poisson(|β|²)` with `β` Gaussian around `α` (variance `N_B/2` per
/// quadrature); the decision is the largest count with uniformly random
/// tie-breaking.
pub fn dd_monte_carlo(sc: &RangingScenario, trials: u64, seed: u64) -> Result<McEstimate> {
    let alpha = sc.returned_photons().sqrt();
    let quad =
        Normal::new(0.0, (sc.n_b / 2.0).sqrt()).map_err(|e| Error::Numerical(e.to_string()))?;
    let thermal =
        Geometric::new(1.0 / (1.0 + sc.n_b)).map_err(|e| Error::Numerical(e.to_string()))?;
    let m = sc.m;
    run_chunks(trials, seed, |rng| {
        let truth = rng.random_range(0..m);
        let mut best = 0u64;
        let mut winners = 0usize;
        let mut picked = usize::MAX;
        for slice in 0..m {
            let count = if slice == truth {
                let re = alpha + quad.sample(rng);
                let im = quad.sample(rng);
                sample_poisson(rng, re * re + im * im)
            } else {
                thermal.sample(rng)
            };
            // reservoir choice among tied maxima keeps the tie-break uniform
            if slice == 0 || count > best {
                best = count;
                winners = 1;
                picked = slice;
            } else if count == best {
                winners += 1;
                if rng.random_range(0..winners) == 0 {
                    picked = slice;
                }
            }
        }
        picked != truth
    })
}

/// Two-slice OPA receiver simulated by drawing the idler count as
/// `Poisson(Gamma(M, N̄_h))` for a uniformly chosen hypothesis and applying
/// the maximum-likelihood threshold.
pub fn opa_monte_carlo_m2(
    sc: &RangingScenario,
    gain: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    let (n0, npi) = two_slice_means(sc, gain)?;
    if n0 == npi {
        // every count is equally likely under both hypotheses: coin flip
        return run_chunks(trials, seed, |rng| rng.random_bool(0.5));
    }
    let (high, low) = if n0 > npi { (n0, npi) } else { (npi, n0) };
    let threshold = ml_threshold(sc.big_m, high, low)?;
    let gamma = |mean: f64| -> Result<Option<Gamma<f64>>> {
        if mean == 0.0 {
            return Ok(None);
        }
        Gamma::new(sc.big_m, mean)
            .map(Some)
            .map_err(|e| Error::Numerical(e.to_string()))
    };
    let (g_high, g_low) = (gamma(high)?, gamma(low)?);
    run_chunks(trials, seed, |rng| {
        let is_high = rng.random_bool(0.5);
        let dist = if is_high { &g_high } else { &g_low };
        let lambda = dist.as_ref().map_or(0.0, |d| d.sample(rng));
        let n = sample_poisson(rng, lambda);
        (n >= threshold) != is_high
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
    fn gains() {
        assert!((default_gain(&sc(2, 1.0, 1e-4, 1.0, 0.1)).unwrap() - 1.02).abs() < 1e-15);
        assert_eq!(default_gain(&sc(2, 1.0, 0.0, 1.0, 0.1)).unwrap(), 1.0);
        assert!((default_gain(&sc(2, 1.0, 1e-3, 3.0, 0.1)).unwrap() - 1.021_081_8).abs() < 1e-7);
        assert!(default_gain(&sc(2, 1.0, 1e-3, 0.0, 0.1)).is_err());
    }

    #[test]
    fn cascade_examples() {
        assert_eq!(cascade_gains(1.7, 1).unwrap(), vec![1.7]);
        let g = cascade_gains(2.0, 2).unwrap();
        assert!((g[0] - 4.0 / 3.0).abs() < 1e-15 && (g[1] - 1.5).abs() < 1e-15);
        assert!((g[0] * g[1] - 2.0).abs() < 1e-15);
        let cfg = OpaConfig::new(5, 3.3).unwrap();
        for w in cfg.return_weights() {
            assert!((w - 2.3 / 5.0).abs() < 1e-12);
        }
        assert!(cascade_gains(0.9, 2).is_err());
    }

    #[test]
    fn mean_photon_formula() {
        let s = sc(2, 1.0, 1e-3, 3.0, 0.0);
        let a = conditional_mean_photon(&s, 1.3, 0.0).unwrap();
        assert_eq!(a, conditional_mean_photon(&s, 1.3, PI).unwrap());
        let s = sc(2, 1.0, 1e-3, 3.0, 0.01);
        assert_eq!(conditional_mean_photon(&s, 1.0, 0.7).unwrap(), 1e-3);
        let g = 1.4;
        let gap = conditional_mean_photon(&s, g, 0.0).unwrap()
            - conditional_mean_photon(&s, g, PI).unwrap();
        let c_p = (1e-3f64 * 1.001).sqrt();
        assert!((gap - 4.0 * c_p * (g * (g - 1.0) * 0.01 / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pipeline_matches_formula() {
        for (m, gain) in [(2, 1.021), (3, 1.5), (5, 2.2)] {
            let s = sc(m, 1.0, 0.01, 2.0, 0.3);
            let cfg = OpaConfig::new(m, gain).unwrap();
            for target in 0..m {
                let via_pipeline = pipeline_mean_photon(&s, &cfg, target).unwrap();
                let formula = conditional_mean_photon(&s, gain, cfg.phases[target]).unwrap();
                assert!(
                    (via_pipeline - formula).abs() < 1e-10,
                    "{m} {target}: {via_pipeline} {formula}"
                );
            }
        }
    }

    #[test]
    fn pmf_basics() {
        let model = CountModel::new(4.0, 0.3).unwrap();
        assert!((count_pmf(0, &model) - 1.3f64.powf(-4.0)).abs() < 1e-15);
        let geo = CountModel::new(1.0, 0.5).unwrap();
        for n in 0..10 {
            let expected = (1.0 / 1.5) * (0.5f64 / 1.5).powi(n as i32);
            assert!((count_pmf(n, &geo) - expected).abs() < 1e-15);
        }
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for n in 0..400 {
            let p = count_pmf(n, &model);
            s0 += p;
            s1 += p * n as f64;
            s2 += p * (n * n) as f64;
        }
        assert!((s0 - 1.0).abs() < 1e-10);
        assert!((s1 / model.mean() - 1.0).abs() < 1e-8);
        assert!(((s2 - s1 * s1) / model.variance() - 1.0).abs() < 1e-8);
        assert!((model.sigma_bar().powi(2) - 0.3 * 1.3).abs() < 1e-12);
    }

    #[test]
    fn tails_are_complementary() {
        let model = CountModel::new(2e4, 0.08).unwrap();
        for k in [0, 1000, 1500, 1600, 1700, 2500] {
            let total = model.cdf_below(k) + model.tail_from(k);
            assert!((total - 1.0).abs() < 1e-10, "{k}: {total}");
        }
    }

    #[test]
    fn exact_m2_examples() {
        let s = sc(2, 1e4, 1e-3, 3.0, 0.0);
        assert_eq!(opa_error_exact_m2(&s, 1.02).unwrap(), 0.5);
        // M = 1, means 1 and 0: threshold 1, error ½·P(0|N̄=1) = ¼
        assert_eq!(ml_threshold(1.0, 1.0, 0.0).unwrap(), 1);
        let miss = CountModel::new(1.0, 1.0).unwrap().cdf_below(1);
        let fa = CountModel::new(1.0, 0.0).unwrap().tail_from(1);
        assert!((0.5 * (miss + fa) - 0.25).abs() < 1e-15);
        assert!(opa_error_exact_m2(&sc(2, 1.0, 1e-3, 0.0, 0.01), 1.1).is_err());
        assert!(matches!(
            opa_error_exact(&sc(3, 1.0, 1e-3, 1.0, 0.01), 1.1),
            Err(Error::NotImplemented(_))
        ));
    }

    #[test]
    fn threshold_is_ml() {
        let (big_m, high, low) = (500.0, 0.11, 0.1);
        let t = ml_threshold(big_m, high, low).unwrap();
        let h = CountModel::new(big_m, high).unwrap();
        let l = CountModel::new(big_m, low).unwrap();
        assert!(h.ln_pmf(t) >= l.ln_pmf(t));
        assert!(h.ln_pmf(t - 1) < l.ln_pmf(t - 1));
    }

    #[test]
    fn gaussian_vs_exact() {
        let s = sc(2, 1.0, 1e-3, 3.0, 0.01);
        let g = default_gain(&s).unwrap();
        assert_eq!(
            opa_error_gaussian_m2(&sc(2, 1e4, 1e-3, 3.0, 0.0), g).unwrap(),
            0.5
        );
        let s = s.with_big_m(2e6).unwrap();
        let (n0, npi) = two_slice_means(&s, g).unwrap();
        let sig = CountModel::new(1.0, n0).unwrap().sigma_bar();
        assert!(s.big_m * (n0 - npi).powi(2) / (sig * sig) > 4.0);
        let exact = opa_error_exact_m2(&s, g).unwrap();
        let approx = opa_error_gaussian_m2(&s, g).unwrap();
        assert!(((approx - exact) / exact).abs() < 0.1, "{exact} {approx}");
    }

    #[test]
    fn gaussian_asymptotic_exponent() {
        let base = sc(2, 1.0, 1e-4, 50.0, 0.01);
        let g = default_gain(&base).unwrap();
        let (m1, m2) = (1.5e10, 3e10);
        let p1 = opa_error_gaussian_m2(&base.with_big_m(m1).unwrap(), g).unwrap();
        let p2 = opa_error_gaussian_m2(&base.with_big_m(m2).unwrap(), g).unwrap();
        let slope = (p1.ln() - p2.ln()) / (m2 - m1);
        let target = base.kappa * base.n_s / base.n_b;
        assert!(
            ((slope - target) / target).abs() < 0.1,
            "{}",
            slope / target
        );
    }

    #[test]
    fn dd_mc_limits() {
        let zero = sc(3, 10.0, 1e-3, 1.0, 0.0);
        let est = dd_monte_carlo(&zero, 200_000, 1).unwrap();
        assert!((est.error - 2.0 / 3.0).abs() < 3.0 * est.std_err);
        let bright = sc(4, 1e4, 1e-2, 0.0, 0.5);
        assert_eq!(dd_monte_carlo(&bright, 10_000, 2).unwrap().error, 0.0);
    }

    #[test]
    fn mc_is_seeded() {
        let s = sc(2, 1e3, 1e-3, 1.0, 0.5);
        let a = dd_monte_carlo(&s, 100_000, 42).unwrap();
        let b = dd_monte_carlo(&s, 100_000, 42).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| dd_monte_carlo(&s, 100_000, 42).unwrap());
        assert_eq!(a, c);
        let g = default_gain(&s).unwrap();
        assert_eq!(
            opa_monte_carlo_m2(&s, g, 50_000, 7).unwrap(),
            opa_monte_carlo_m2(&s, g, 50_000, 7).unwrap()
        );
    }

    #[test]
    fn opa_mc_equal_means() {
        let s = sc(2, 1e3, 1e-3, 1.0, 0.0);
        let est = opa_monte_carlo_m2(&s, 1.05, 100_000, 3).unwrap();
        assert!((est.error - 0.5).abs() < 3.0 * est.std_err);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn cascade_invariants(gain in 1.0f64..50.0, m in 1usize..40) {
            let cfg = OpaConfig::new(m, gain).unwrap();
            let (prod, per_level) = cfg.invariant_defects();
            prop_assert!(prod < 1e-12 && per_level < 1e-12);
            prop_assert!(cfg.cascade_gains.iter().all(|&g| g >= 1.0));
        }
    }
}

//! Pulse-position-modulated entanglement-assisted communication.
//!
//! A symbol is the index of the one slice, out of `m`, that carries the
//! signal; each slice spans `M` modes at `n_S` photons per mode on average,
//! so the lit slice holds `N_S = m·n_S` photons per mode. Decoding is the
//! ranging problem, and the symbol error fixes the rate through the
//! symmetric-channel mutual information.

use crate::error::{check_at_least, check_unit_interval, invalid, Result};
use crate::ranging::{entangled_qcb_exponent, RangingScenario};

/// Relative size below which a mutual information is rounding noise.
const MI_FLOOR: f64 = 1e-12;

/// Mutual information of an `m`-ary symmetric channel with total error
/// probability `p`, in bits: `log₂m + (1−p)log₂(1−p) + p log₂(p/(m−1))`.
pub fn mutual_info_ppm(p: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(invalid("m", "need at least 2 symbols"));
    }
    check_unit_interval("p", p)?;
    let xlog = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * y.log2() };
    let mf = m as f64;
    let info = mf.log2() + xlog(1.0 - p, 1.0 - p) + xlog(p, p / (mf - 1.0));
    // rounding residue at the random-guess point
    Ok(if info < MI_FLOOR * mf.log2() {
        0.0
    } else {
        info
    })
}

/// Which expression of the entangled error feeds the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorModel {
    /// Chernoff exponent of the three-mode pair with the brightness term.
    #[default]
    Full,
    /// High-noise closed form `(m−1)/m · exp(−2MκN_S/N_B)`.
    Asymptotic,
}

fn symbol_error(
    m: usize,
    big_m: f64,
    n_s: f64,
    kappa: f64,
    n_b: f64,
    model: ErrorModel,
) -> Result<f64> {
    let sc = RangingScenario::new(m, big_m, m as f64 * n_s, n_b, kappa)?;
    let exponent = match model {
        ErrorModel::Full => entangled_qcb_exponent(&sc, true)?.exponent,
        ErrorModel::Asymptotic => {
            if n_b <= 0.0 {
                return Err(invalid("n_b", "asymptotic form needs N_B > 0"));
            }
            2.0 * kappa * sc.n_s / n_b
        }
    };
    Ok(sc.guess_error() * (-big_m * exponent).exp())
}

/// Bits per channel use per mode, `I(P_E)/(M·m)`.
pub fn rate(
    m: usize,
    big_m: f64,
    n_s: f64,
    kappa: f64,
    n_b: f64,
    model: ErrorModel,
) -> Result<f64> {
    let p = symbol_error(m, big_m, n_s, kappa, n_b, model)?;
    Ok(mutual_info_ppm(p, m)? / (big_m * m as f64))
}

/// An optimized operating point with its capacity benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommPoint {
    pub n_s: f64,
    pub kappa: f64,
    pub n_b: f64,
    pub big_m: f64,
    pub m_star: usize,
    pub r_star: f64,
    pub c: f64,
    pub c_e: f64,
}

/// Points per decade of the coarse slice-count scan.
const SCAN_PER_DECADE: f64 = 8.0;

/// Maximizes [`rate`] over the integer slice count. A logarithmic scan over
/// `[2, max(10³·m_guide, 10)]` with `m_guide = N_B/(2Mκn_S)` brackets the
/// optimum. An integer ternary search then narrows it down; the final `±1`
/// neighbours are checked too.
pub fn optimal_rate(
    big_m: f64,
    n_s: f64,
    kappa: f64,
    n_b: f64,
    model: ErrorModel,
) -> Result<CommPoint> {
    check_at_least("n_s", n_s, 0.0)?;
    let c = classical_capacity(kappa, n_b, n_s)?;
    let c_e = ea_capacity(kappa, n_b, n_s)?;
    let eval = |m: usize| rate(m, big_m, n_s, kappa, n_b, model);
    let denom = 2.0 * big_m * kappa * n_s;
    let guide = if denom > 0.0 { n_b / denom } else { 1.0 };
    let upper = (1e3 * guide).clamp(10.0, 1e15);
    let steps = ((upper / 2.0).log10() * SCAN_PER_DECADE).ceil().max(1.0) as usize;
    let mut grid: Vec<usize> = (0..=steps)
        .map(|i| (2.0 * (upper / 2.0).powf(i as f64 / steps as f64)).round() as usize)
        .collect();
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&m| eval(m)).collect::<Result<_>>()?;
    let best = (0..grid.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let point = |m_star: usize, r_star: f64| CommPoint {
        n_s,
        kappa,
        n_b,
        big_m,
        m_star,
        r_star,
        c,
        c_e,
    };
    if values[best] <= 0.0 {
        return Ok(point(2, 0.0));
    }
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if eval(m1)? < eval(m2)? {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mut m_star = grid[best];
    let mut r_star = values[best];
    for m in lo.saturating_sub(1).max(2)..=hi + 1 {
        let r = eval(m)?;
        if r > r_star {
            m_star = m;
            r_star = r;
        }
    }
    Ok(point(m_star, r_star))
}

/// Entropy of a thermal state with `n` photons, in bits:
/// `(n+1)log₂(n+1) − n log₂n`.
pub fn g_entropy(n: f64) -> Result<f64> {
    check_at_least("n", n, 0.0)?;
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok((n + 1.0) * (n + 1.0).log2() - n * n.log2())
}

/// Classical capacity of the thermal-loss channel at `n_S` input photons,
/// `g(κn_S + N_B) − g(N_B)`.
pub fn classical_capacity(kappa: f64, n_b: f64, n_s: f64) -> Result<f64> {
    check_unit_interval("kappa", kappa)?;
    Ok(g_entropy(kappa * n_s + n_b)? - g_entropy(n_b)?)
}

/// Weak-signal form `κn_S / (ln2 · N_B)`.
pub fn classical_capacity_low_brightness(kappa: f64, n_b: f64, n_s: f64) -> Result<f64> {
    if n_b <= 0.0 {
        return Err(invalid("n_b", "weak-signal form needs N_B > 0"));
    }
    Ok(kappa * n_s / (std::f64::consts::LN_2 * n_b))
}

/// Entanglement-assisted capacity `g(n_S) + g(n_S′) − g(A₊) − g(A₋)` with
/// `n_S′ = κn_S + N_B`, `D = √((n_S + n_S′ + 1)² − 4κn_S(n_S+1))` and
/// `A_± = (D − 1 ± (n_S′ − n_S))/2`.
pub fn ea_capacity(kappa: f64, n_b: f64, n_s: f64) -> Result<f64> {
    check_unit_interval("kappa", kappa)?;
    check_at_least("n_b", n_b, 0.0)?;
    check_at_least("n_s", n_s, 0.0)?;
    let n_out = kappa * n_s + n_b;
    let d = ((n_s + n_out + 1.0).powi(2) - 4.0 * kappa * n_s * (n_s + 1.0)).sqrt();
    let a_plus = ((d - 1.0 + (n_out - n_s)) / 2.0).max(0.0);
    let a_minus = ((d - 1.0 - (n_out - n_s)) / 2.0).max(0.0);
    Ok((g_entropy(n_s)? + g_entropy(n_out)? - g_entropy(a_plus)? - g_entropy(a_minus)?).max(0.0))
}

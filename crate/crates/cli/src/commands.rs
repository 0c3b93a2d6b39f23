//! Subcommand implementations. Each builds its whole table in memory; the
//! caller writes it only after every row succeeded.

use rayon::prelude::*;

use qranging::comm::{optimal_rate, ErrorModel};
use qranging::ranging::{bounds_report, classical_dd, classical_fock_oracle, RangingScenario};
use qranging::receivers::{dd_monte_carlo, default_gain, opa_error_exact, opa_monte_carlo_m2};
use qranging::table::{Cell, Table};
use qranging::validation::{run_selftest, Check, SuiteConfig};

use crate::args::{Command, Common, ModeGrid, Model, Panel};
use crate::CliError;

const DEFAULT_SEED: u64 = 1;
const DEFAULT_TRIALS: u64 = 1_000_000;

/// What a subcommand produced.
pub enum Outcome {
    Table(Table),
    /// Self-test report lines plus the same checks as a table.
    Checks {
        lines: Vec<String>,
        table: Table,
        passed: bool,
    },
}

/// Scenario values and their defaults.
struct Defaults {
    m: usize,
    big_m: f64,
    ns: f64,
    nb: f64,
    kappa: f64,
}

fn scenario(c: &Common, d: Defaults) -> Result<RangingScenario, CliError> {
    Ok(RangingScenario::new(
        c.m.unwrap_or(d.m),
        c.big_m.unwrap_or(d.big_m),
        c.ns.unwrap_or(d.ns),
        c.nb.unwrap_or(d.nb),
        c.kappa.unwrap_or(d.kappa),
    )?)
}

/// Flags a subcommand does not use are rejected rather than ignored.
fn reject_unused(c: &Common, command: &str, unused: &[&str]) -> Result<(), CliError> {
    let set = |name: &str| match name {
        "m" => c.m.is_some(),
        "big-m" => c.big_m.is_some(),
        "trials" => c.trials.is_some(),
        "seed" => c.seed.is_some(),
        "cutoff" => c.cutoff.is_some(),
        _ => false,
    };
    match unused.iter().find(|n| set(n)) {
        Some(name) => Err(CliError::Usage(format!(
            "`{command}` does not take --{name}"
        ))),
        None => Ok(()),
    }
}

fn trials(c: &Common) -> Result<u64, CliError> {
    match c.trials.unwrap_or(DEFAULT_TRIALS) {
        0 => Err(CliError::Usage("--trials must be at least 1".into())),
        t => Ok(t),
    }
}

/// `points` values from `lo` to `hi`, equally spaced in log.
fn log_grid(lo: f64, hi: f64, points: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) || points == 0 {
        return Err(CliError::Usage(format!(
            "{what} grid needs 0 < min <= max and at least one point"
        )));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

fn scenario_comments(t: &mut Table, sc: &RangingScenario) {
    t.comment(format!(
        "m = {}, N_S = {}, N_B = {}, kappa = {}",
        sc.m, sc.n_s, sc.n_b, sc.kappa
    ));
}

fn bounds(c: &Common, active: bool) -> Result<Table, CliError> {
    reject_unused(c, "bounds", &["trials", "seed", "cutoff"])?;
    let sc = scenario(
        c,
        Defaults {
            m: 2,
            big_m: 1e4,
            ns: 1e-3,
            nb: 3.0,
            kappa: 0.01,
        },
    )?;
    let r = bounds_report(&sc, !active)?;
    let mut t = Table::new([
        "m",
        "M",
        "N_S",
        "N_B",
        "kappa",
        "p_c_qcb",
        "p_c_lb",
        "p_c_dd",
        "p_e_qcb_full",
        "p_e_qcb_asymptotic",
        "p_e_ub",
        "exp_c_qcb",
        "exp_c_lb",
        "exp_c_dd",
        "exp_e_qcb_full",
        "exp_e_qcb_asymptotic",
        "exp_e_ub",
    ]);
    t.comment(format!("passive return signature: {}", !active));
    t.push(vec![
        sc.m.into(),
        sc.big_m.into(),
        sc.n_s.into(),
        sc.n_b.into(),
        sc.kappa.into(),
        r.p_c_qcb.into(),
        r.p_c_lb.into(),
        r.p_c_dd.into(),
        r.p_e_qcb_full.into(),
        r.p_e_qcb_asymptotic.into(),
        r.p_e_ub.into(),
        r.exp_c_qcb.into(),
        r.exp_c_lb.into(),
        r.exp_c_dd.into(),
        r.exp_e_qcb_full.into(),
        r.exp_e_qcb_asymptotic.into(),
        r.exp_e_ub.into(),
    ])?;
    Ok(t)
}

fn fig2(c: &Common, panel: Panel, grid: &ModeGrid, max_deficit: f64) -> Result<Table, CliError> {
    reject_unused(c, "fig2", &["big-m", "trials", "seed"])?;
    let (m, nb) = match panel {
        Panel::A => (2, 3.0),
        Panel::B => (3, 1.0),
        Panel::C => (50, 20.0),
    };
    let base = scenario(
        c,
        Defaults {
            m,
            big_m: 1.0,
            ns: 1e-3,
            nb,
            kappa: 0.01,
        },
    )?;
    if c.cutoff.is_some() && panel == Panel::C {
        return Err(CliError::Usage(
            "Fock-oracle columns are only available for panels a and b".into(),
        ));
    }
    if !(max_deficit > 0.0 && max_deficit < 1.0) {
        return Err(CliError::Usage("--max-deficit must lie in (0, 1)".into()));
    }
    let mut modes: Vec<f64> = log_grid(grid.m_min.max(1.0), grid.m_max, grid.points, "M")?
        .into_iter()
        .map(f64::round)
        .collect();
    modes.dedup();
    let scenarios: Vec<RangingScenario> = modes
        .iter()
        .map(|&m| base.with_big_m(m))
        .collect::<Result<_, _>>()?;
    let opa = panel == Panel::A;
    let oracle = c.cutoff;
    if let Some(cut) = oracle {
        // surface a bad cutoff before any work
        classical_fock_oracle(&scenarios[0], cut)?;
    }

    let mut header = vec!["M", "p_c_qcb", "p_c_lb", "p_c_dd", "p_e_qcb_full", "p_e_ub"];
    if opa {
        header.push("p_e_opa");
    }
    if oracle.is_some() {
        if base.m == 2 {
            header.push("p_c_helstrom_fock");
        }
        header.push("p_c_pgm_fock");
    }
    let rows: Vec<Vec<Cell>> = scenarios
        .par_iter()
        .map(|sc| -> Result<Vec<Cell>, CliError> {
            let r = bounds_report(sc, true)?;
            let mut row: Vec<Cell> = vec![
                sc.big_m.into(),
                r.p_c_qcb.into(),
                r.p_c_lb.into(),
                r.p_c_dd.into(),
                r.p_e_qcb_full.into(),
                r.p_e_ub.into(),
            ];
            if opa {
                row.push(opa_error_exact(sc, default_gain(sc)?)?.into());
            }
            if let Some(cut) = oracle {
                let f = classical_fock_oracle(sc, cut)?;
                let ok = f.trace_deficit < max_deficit;
                if sc.m == 2 {
                    row.push(f.helstrom.filter(|_| ok).into());
                }
                row.push(ok.then_some(f.pgm).into());
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;

    let mut t = Table::new(header);
    scenario_comments(&mut t, &base);
    if let Some(cut) = oracle {
        t.comment(format!(
            "Fock columns: concentrated single-mode problem at cutoff {cut}; empty where the trace deficit exceeds {max_deficit:e}"
        ));
    }
    for row in rows {
        t.push(row)?;
    }
    Ok(t)
}

#[allow(clippy::too_many_arguments)]
fn fig3(
    c: &Common,
    m_list: &[f64],
    ns_min: f64,
    ns_max: f64,
    points: usize,
    model: Model,
) -> Result<Table, CliError> {
    reject_unused(c, "fig3", &["m", "big-m", "trials", "seed", "cutoff"])?;
    let kappa = c.kappa.unwrap_or(0.1);
    let nb = c.nb.unwrap_or(20.0);
    if c.ns.is_some() {
        return Err(CliError::Usage(
            "fig3 sweeps N_S; use --ns-min/--ns-max".into(),
        ));
    }
    if m_list.is_empty()
        || m_list
            .iter()
            .any(|&m| !(m >= 1.0 && m.fract() == 0.0 && m.is_finite()))
    {
        return Err(CliError::Usage("--m-list needs positive integers".into()));
    }
    let grid = log_grid(ns_min, ns_max, points, "N_S")?;
    // validates kappa and nb once
    RangingScenario::new(2, 1.0, grid[0], nb, kappa)?;
    let model = match model {
        Model::Full => ErrorModel::Full,
        Model::Asymptotic => ErrorModel::Asymptotic,
    };
    let jobs: Vec<(f64, f64)> = m_list
        .iter()
        .flat_map(|&m| grid.iter().map(move |&ns| (m, ns)))
        .collect();
    let rows: Vec<Vec<Cell>> = jobs
        .par_iter()
        .map(|&(big_m, ns)| -> Result<Vec<Cell>, CliError> {
            let p = optimal_rate(big_m, ns, kappa, nb, model)?;
            Ok(vec![
                ns.into(),
                big_m.into(),
                p.m_star.into(),
                p.r_star.into(),
                p.c.into(),
                p.c_e.into(),
                (p.r_star / p.c).into(),
                (p.c_e / p.c).into(),
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut t = Table::new([
        "n_S", "M", "m_star", "R_star", "C", "C_E", "R_star/C", "C_E/C",
    ]);
    t.comment(format!(
        "kappa = {kappa}, N_B = {nb}, rates in bits per mode"
    ));
    for row in rows {
        t.push(row)?;
    }
    Ok(t)
}

fn receiver(c: &Common, exact: bool, mc: bool, gain: Option<f64>) -> Result<Table, CliError> {
    reject_unused(c, "receiver", &["cutoff"])?;
    let sc = scenario(
        c,
        Defaults {
            m: 2,
            big_m: 1e5,
            ns: 1e-3,
            nb: 3.0,
            kappa: 0.01,
        },
    )?;
    let (exact, mc) = if exact || mc {
        (exact, mc)
    } else {
        (true, true)
    };
    let trials = trials(c)?;
    let seed = c.seed.unwrap_or(DEFAULT_SEED);
    let gain = match gain {
        Some(g) => g,
        None => default_gain(&sc)?,
    };
    let p_exact = if exact {
        Some(opa_error_exact(&sc, gain)?)
    } else {
        None
    };
    let estimate = if mc {
        Some(opa_monte_carlo_m2(&sc, gain, trials, seed)?)
    } else {
        None
    };
    let mut t = Table::new([
        "m",
        "M",
        "N_S",
        "N_B",
        "kappa",
        "gain",
        "p_exact",
        "p_mc",
        "mc_std_err",
        "trials",
        "seed",
    ]);
    t.push(vec![
        sc.m.into(),
        sc.big_m.into(),
        sc.n_s.into(),
        sc.n_b.into(),
        sc.kappa.into(),
        gain.into(),
        p_exact.into(),
        estimate.map(|e| e.error).into(),
        estimate.map(|e| e.std_err).into(),
        if mc { Cell::Int(trials) } else { Cell::Missing },
        if mc { Cell::Int(seed) } else { Cell::Missing },
    ])?;
    if mc {
        t.comment(format!("seed: {seed}"));
    }
    Ok(t)
}

fn ddmc(c: &Common) -> Result<Table, CliError> {
    reject_unused(c, "ddmc", &["cutoff"])?;
    let sc = scenario(
        c,
        Defaults {
            m: 2,
            big_m: 1e4,
            ns: 1.5e-2,
            nb: 1.0,
            kappa: 0.01,
        },
    )?;
    let trials = trials(c)?;
    let seed = c.seed.unwrap_or(DEFAULT_SEED);
    let exact = classical_dd(&sc)?;
    let est = dd_monte_carlo(&sc, trials, seed)?;
    let z = if est.std_err > 0.0 {
        (est.error - exact) / est.std_err
    } else {
        f64::NAN
    };
    let mut t = Table::new([
        "m",
        "M",
        "N_S",
        "N_B",
        "kappa",
        "p_exact",
        "p_mc",
        "mc_std_err",
        "z",
        "trials",
        "seed",
    ]);
    t.push(vec![
        sc.m.into(),
        sc.big_m.into(),
        sc.n_s.into(),
        sc.n_b.into(),
        sc.kappa.into(),
        exact.into(),
        est.error.into(),
        est.std_err.into(),
        z.into(),
        trials.into(),
        seed.into(),
    ])?;
    t.comment(format!("seed: {seed}"));
    Ok(t)
}

fn check_line(c: &Check) -> String {
    format!(
        "{} {}: deviation {:.3e} (tolerance {:.1e}){}",
        if c.passed { "PASS" } else { "FAIL" },
        c.name,
        c.deviation,
        c.tolerance,
        if c.detail.is_empty() {
            String::new()
        } else {
            format!("; {}", c.detail)
        }
    )
}

fn selftest(c: &Common, one_mode_pairs: usize, two_mode_pairs: usize) -> Result<Outcome, CliError> {
    reject_unused(c, "selftest", &["m", "big-m"])?;
    if c.ns.is_some() || c.nb.is_some() || c.kappa.is_some() {
        return Err(CliError::Usage(
            "`selftest` does not take scenario flags".into(),
        ));
    }
    if one_mode_pairs + two_mode_pairs == 0 {
        return Err(CliError::Usage(
            "the oracle ensemble needs at least one pair".into(),
        ));
    }
    if c.cutoff.is_some_and(|k| k < 2) {
        return Err(CliError::Usage("--cutoff must be at least 2".into()));
    }
    let defaults = SuiteConfig::default();
    let cfg = SuiteConfig {
        seed: c.seed.unwrap_or(defaults.seed),
        one_mode_pairs,
        two_mode_pairs,
        cutoff: c.cutoff,
        mc_trials: trials(c)?,
        ..defaults
    };
    let checks = run_selftest(&cfg);
    let mut table = Table::new(["check", "passed", "deviation", "tolerance", "detail"]);
    table.comment(format!("seed: {}", cfg.seed));
    for ch in &checks {
        table.push(vec![
            ch.name.as_str().into(),
            Cell::Int(ch.passed as u64),
            ch.deviation.into(),
            ch.tolerance.into(),
            ch.detail.as_str().into(),
        ])?;
    }
    Ok(Outcome::Checks {
        lines: checks.iter().map(check_line).collect(),
        passed: checks.iter().all(|ch| ch.passed),
        table,
    })
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let c = command.common();
    let table = match command {
        Command::Bounds {
            active_signature, ..
        } => bounds(c, *active_signature)?,
        Command::Fig2 {
            panel,
            grid,
            max_deficit,
            ..
        } => fig2(c, *panel, grid, *max_deficit)?,
        Command::Fig3 {
            m_list,
            ns_min,
            ns_max,
            points,
            model,
            ..
        } => fig3(c, m_list, *ns_min, *ns_max, *points, *model)?,
        Command::Receiver {
            exact, mc, gain, ..
        } => receiver(c, *exact, *mc, *gain)?,
        Command::Ddmc { .. } => ddmc(c)?,
        Command::Selftest {
            one_mode_pairs,
            two_mode_pairs,
            ..
        } => {
            return selftest(c, *one_mode_pairs, *two_mode_pairs);
        }
    };
    Ok(Outcome::Table(table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = log_grid(1.0, 100.0, 3, "x").unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12 && (g[2] - 100.0).abs() < 1e-12);
        assert_eq!(log_grid(5.0, 5.0, 1, "x").unwrap(), vec![5.0]);
        assert!(log_grid(0.0, 1.0, 3, "x").is_err());
        assert!(log_grid(2.0, 1.0, 3, "x").is_err());
        assert!(log_grid(1.0, 2.0, 0, "x").is_err());
    }

    #[test]
    fn degenerate_bounds_row() {
        let c = Common {
            kappa: Some(0.0),
            ..Common::default()
        };
        let t = bounds(&c, false).unwrap();
        let row = &t.rows()[0];
        let col = |name: &str| {
            let i = t.header().iter().position(|h| h == name).unwrap();
            match row[i] {
                Cell::Num(x) => x,
                _ => f64::NAN,
            }
        };
        assert_eq!(col("p_c_qcb"), 0.5);
        assert_eq!(col("p_c_lb"), 0.25);
        assert_eq!(col("p_c_dd"), 0.5);
        assert_eq!(col("p_e_qcb_full"), 0.5);
        assert_eq!(col("p_e_ub"), 1.0);
    }
}

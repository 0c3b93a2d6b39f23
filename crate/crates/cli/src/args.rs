//! Command-line grammar and `key = value` config merging.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "qranging",
    version,
    about = "Quantum ranging bounds, receiver simulations and sweeps"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Every bound at one scenario point, as one CSV row.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Evaluate the entangled bounds without the passive return signature.
        #[arg(long)]
        active_signature: bool,
    },
    /// Error probability versus the number of modes.
    Fig2 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        panel: Panel,
        #[command(flatten)]
        grid: ModeGrid,
        /// Largest accepted truncation loss for the Fock-oracle columns.
        #[arg(long, default_value_t = 1e-10)]
        max_deficit: f64,
    },
    /// Optimized PPM rates against capacities versus signal brightness.
    Fig3 {
        #[command(flatten)]
        common: Common,
        /// Modes per symbol, one sweep each.
        #[arg(long, value_delimiter = ',', default_values_t = [1e2, 1e3, 1e4])]
        m_list: Vec<f64>,
        #[arg(long, default_value_t = 1e-6)]
        ns_min: f64,
        #[arg(long, default_value_t = 1e-2)]
        ns_max: f64,
        #[arg(long, default_value_t = 33)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Model::Full)]
        model: Model,
    },
    /// OPA receiver error: exact and/or Monte Carlo.
    Receiver {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        mc: bool,
        /// Total OPA gain (default `1 + m√N_S/N_B`).
        #[arg(long)]
        gain: Option<f64>,
    },
    /// Direct-detection Monte Carlo against the exact sum.
    Ddmc {
        #[command(flatten)]
        common: Common,
    },
    /// Analytic-versus-oracle and invariant checks.
    Selftest {
        #[command(flatten)]
        common: Common,
        /// Random one-mode pairs in the oracle ensemble.
        #[arg(long, default_value_t = 70)]
        one_mode_pairs: usize,
        /// Random two-mode pairs in the oracle ensemble.
        #[arg(long, default_value_t = 30)]
        two_mode_pairs: usize,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Bounds { common, .. }
            | Command::Fig2 { common, .. }
            | Command::Fig3 { common, .. }
            | Command::Receiver { common, .. }
            | Command::Ddmc { common }
            | Command::Selftest { common, .. } => common,
        }
    }
}

/// Flags shared by every subcommand; unset values fall back to
/// per-subcommand defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Number of range slices.
    #[arg(long)]
    pub m: Option<usize>,
    /// Modes per pulse.
    #[arg(long, allow_hyphen_values = true)]
    pub big_m: Option<f64>,
    /// Signal photons per mode.
    #[arg(long, allow_hyphen_values = true)]
    pub ns: Option<f64>,
    /// Background photons per mode.
    #[arg(long, allow_hyphen_values = true)]
    pub nb: Option<f64>,
    /// Target reflectivity.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-mode Fock cutoff.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` file merged under the explicit flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ModeGrid {
    #[arg(long, default_value_t = 1e3)]
    pub m_min: f64,
    #[arg(long, default_value_t = 1e7)]
    pub m_max: f64,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    A,
    B,
    C,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Full,
    Asymptotic,
}

fn parse(argv: &[OsString]) -> Result<Cli, CliError> {
    Cli::try_parse_from(argv).map_err(CliError::Clap)
}

/// Turns config lines into flags. Keys may use `_` or `-`; `true`/`false`
/// values toggle switches.
pub fn config_flags(text: &str, origin: &Path) -> Result<Vec<OsString>, CliError> {
    let mut flags = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected `key = value`",
                origin.display(),
                no + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!(
                "{}:{}: invalid key",
                origin.display(),
                no + 1
            )));
        }
        match value {
            "true" => flags.push(format!("--{key}").into()),
            "false" => {}
            _ => flags.push(format!("--{key}={value}").into()),
        }
    }
    Ok(flags)
}

/// Parses the command line, then re-parses with the config file's flags
/// inserted right after the subcommand so explicit flags take precedence.
pub fn parse_with_config(argv: Vec<OsString>) -> Result<Cli, CliError> {
    let first = parse(&argv)?;
    let Some(path) = first.command.common().config.clone() else {
        return Ok(first);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let extra = config_flags(&text, &path)?;
    let mut merged = argv[..2].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[2..]);
    parse(&merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_lines() {
        let flags = config_flags(
            "# c\nns = 1e-3\nbig_m=100\nexact = true\nmc = false\n",
            Path::new("x"),
        )
        .unwrap();
        assert_eq!(flags, os(&["--ns=1e-3", "--big-m=100", "--exact"]));
        assert!(config_flags("oops", Path::new("x")).is_err());
        assert!(config_flags("config = y", Path::new("x")).is_err());
    }

    #[test]
    fn later_flags_win() {
        let cli = parse(&os(&["qranging", "bounds", "--ns=1e-3", "--ns=2e-3"])).unwrap();
        assert_eq!(cli.command.common().ns, Some(2e-3));
    }

    #[test]
    fn fig3_list() {
        let cli = parse(&os(&["qranging", "fig3", "--m-list", "10,20"])).unwrap();
        let Command::Fig3 { m_list, .. } = cli.command else {
            panic!()
        };
        assert_eq!(m_list, vec![10.0, 20.0]);
    }
}

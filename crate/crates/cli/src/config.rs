use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use aperiodic_spectrum::lyapunov::MAX_LYAPUNOV_LEVEL;
use aperiodic_spectrum::spectrum::MAX_BAND_LEVEL;
use aperiodic_spectrum::tracemap::{DEFAULT_NMAX_CAP, MIN_MESH_RESOLUTION};

use crate::error::{CliError, CliResult};
use crate::model_file::{load_model, LoadedModel};

pub const THREADS_ENV: &str = "APERIODIC_SPECTRUM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "aperiodic-spectrum", version, about = "Spectra of Fibonacci-type Schrodinger operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Model file (TOML) or built-in: free, step:<lambda>, kp:<lambda>
    #[arg(long, global = true)]
    pub model: Option<String>,

    /// Energy window as "lo,hi"
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub window: Option<String>,

    /// Levels as "4,8,12" or an inclusive range "0..4"
    #[arg(long, visible_alias = "level", global = true)]
    pub levels: Option<String>,

    /// Number of grid points (mesh resolution for `surface`)
    #[arg(long, global = true)]
    pub grid: Option<usize>,

    /// Depth of the trace recursion for `escape`
    #[arg(long, global = true)]
    pub nmax: Option<usize>,

    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    /// Recorded in the config hash
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Subcommand)]
pub enum Command {
    /// Band covers sigma_n, one CSV per level
    Bands,
    /// Fricke-Vogt invariant along an energy grid
    Invariant,
    /// Escape classification along an energy grid
    Escape,
    /// Lyapunov exponents along an energy grid
    Lyapunov,
    /// Box-counting dimension from two levels
    Dimension,
    /// Level surface of the invariant
    Surface {
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        invariant: f64,
        #[arg(long, default_value_t = 3.0)]
        half_width: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bands => "bands",
            Self::Invariant => "invariant",
            Self::Escape => "escape",
            Self::Lyapunov => "lyapunov",
            Self::Dimension => "dimension",
            Self::Surface { .. } => "surface",
        }
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<LoadedModel>,
    pub window: (f64, f64),
    pub levels: Vec<usize>,
    pub grid: usize,
    pub nmax: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: u64,
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    command: &'a str,
    model: String,
    window: (f64, f64),
    levels: &'a [usize],
    grid: usize,
    nmax: usize,
    seed: u64,
    invariant: Option<f64>,
    half_width: Option<f64>,
}

pub fn parse_window(text: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::config(format!("window must be \"lo,hi\", got '{text}'"));
    let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CliError::config(format!("window [{lo}, {hi}] is empty")));
    }
    Ok((lo, hi))
}

pub fn parse_levels(text: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::config(format!("levels must look like \"4,8\" or \"0..4\", got '{text}'"));
    let mut levels: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?
    };
    levels.sort_unstable();
    levels.dedup();
    Ok(levels)
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let command = cli.command;
        let (window, levels, grid, nmax) = match command {
            Command::Bands => ((0.0, 20.0), vec![8], 0, 0),
            Command::Invariant => ((0.1, 50.0), vec![], 1000, 0),
            Command::Escape => ((0.0, 20.0), vec![], 1001, 40),
            Command::Lyapunov => ((0.0, 20.0), vec![20], 201, 0),
            Command::Dimension => ((0.0, 20.0), vec![8, 12], 0, 0),
            Command::Surface { .. } => ((0.0, 0.0), vec![], 48, 0),
        };
        let window = cli.window.as_deref().map(parse_window).transpose()?.unwrap_or(window);
        let levels = cli.levels.as_deref().map(parse_levels).transpose()?.unwrap_or(levels);
        let grid = cli.grid.unwrap_or(grid);
        let nmax = cli.nmax.unwrap_or(nmax);

        let model = match (&cli.model, command) {
            (Some(spec), _) => Some(load_model(spec)?),
            (None, Command::Surface { .. }) => None,
            (None, _) => return Err(CliError::config(format!("{} needs --model", command.name()))),
        };

        let level_cap = match command {
            Command::Bands | Command::Dimension => MAX_BAND_LEVEL,
            Command::Lyapunov => MAX_LYAPUNOV_LEVEL,
            _ => usize::MAX,
        };
        if let Some(&top) = levels.iter().max() {
            if top > level_cap {
                return Err(CliError::config(format!("level {top} exceeds the cap of {level_cap}")));
            }
        }
        match command {
            Command::Bands | Command::Lyapunov if levels.is_empty() => {
                return Err(CliError::config("at least one level is required"));
            }
            Command::Dimension if levels.len() != 2 => {
                return Err(CliError::config("dimension needs exactly two levels, as in --levels 8,12"));
            }
            Command::Invariant | Command::Escape | Command::Lyapunov if grid < 2 => {
                return Err(CliError::config("grid needs at least 2 points"));
            }
            Command::Escape if nmax > DEFAULT_NMAX_CAP => {
                return Err(CliError::config(format!("nmax {nmax} exceeds the cap of {DEFAULT_NMAX_CAP}")));
            }
            Command::Surface { invariant, half_width } => {
                if grid < MIN_MESH_RESOLUTION {
                    return Err(CliError::config(format!("mesh resolution must be at least {MIN_MESH_RESOLUTION}")));
                }
                if !(invariant.is_finite() && half_width.is_finite() && half_width > 0.0) {
                    return Err(CliError::config("invariant must be finite and half-width positive"));
                }
            }
            _ => {}
        }
        if cli.threads == Some(0) {
            return Err(CliError::config("threads must be positive"));
        }

        Ok(Self {
            command,
            model,
            window,
            levels,
            grid,
            nmax,
            out: cli.out.clone(),
            threads: cli.threads,
            seed: cli.seed,
        })
    }

    /// SHA-256 of everything that determines the numbers written; thread
    /// count and output directory are left out.
    pub fn hash(&self) -> String {
        let (invariant, half_width) = match self.command {
            Command::Surface { invariant, half_width } => (Some(invariant), Some(half_width)),
            _ => (None, None),
        };
        let hashed = HashedConfig {
            command: self.command.name(),
            model: self.model.as_ref().map_or_else(String::new, |m| format!("{:?}", m.model)),
            window: self.window,
            levels: &self.levels,
            grid: self.grid,
            nmax: self.nmax,
            seed: self.seed,
            invariant,
            half_width,
        };
        let json = serde_json::to_string(&hashed).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("aperiodic-spectrum").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn windows_and_levels() {
        assert_eq!(parse_window("-1.5, 2").unwrap(), (-1.5, 2.0));
        assert!(parse_window("2,1").is_err());
        assert!(parse_window("1").is_err());
        assert_eq!(parse_levels("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_levels("12,4,8,4").unwrap(), vec![4, 8, 12]);
        assert!(parse_levels("a").is_err());
        assert!(parse_levels("4..2").is_err());
    }

    #[test]
    fn defaults_and_caps() {
        let c = RunConfig::from_cli(&cli(&["bands", "--model", "free"])).unwrap();
        assert_eq!(c.levels, vec![8]);
        assert!(RunConfig::from_cli(&cli(&["bands", "--model", "free", "--levels", "40"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["dimension", "--model", "free", "--levels", "8"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["escape"])).is_err());
        assert!(RunConfig::from_cli(&cli(&["surface", "--invariant", "-0.2"])).is_ok());
    }

    #[test]
    fn hash_ignores_threads_and_output() {
        let a = RunConfig::from_cli(&cli(&["bands", "--model", "step:1", "--threads", "1", "--out", "x"])).unwrap();
        let b = RunConfig::from_cli(&cli(&["bands", "--model", "step:1", "--threads", "4"])).unwrap();
        let c = RunConfig::from_cli(&cli(&["bands", "--model", "step:1", "--seed", "7"])).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}

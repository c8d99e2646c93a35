use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use epifv::ModelParams;
use epifv_cli::commands::{self, PointChoice, OUT_ROOT_ENV};
use epifv_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "epifv", version, about = "Finite-volume solver for nonlocal SIR/SARS reaction-diffusion models")]
struct Cli {
    /// Root for output directories not given explicitly.
    #[arg(long, global = true, env = OUT_ROOT_ENV)]
    out_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a config file.
    Run {
        config: PathBuf,
        /// Seed for the example2-random initial condition.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print the SARS equilibria and their stability.
    Equilibria {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated incidence rates; one row each.
        #[arg(long, value_delimiter = ',')]
        sweep_alpha: Vec<f64>,
    },
    /// Linear stability and Turing scan at an equilibrium or a given point.
    Stability {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0.0)]
        d1: f64,
        #[arg(long, default_value_t = 0.0)]
        d2: f64,
        #[arg(long, default_value_t = 0.0)]
        d3: f64,
        /// `e1`, `e2`, or `u,v,w`.
        #[arg(long, default_value = "e2")]
        point: String,
        /// Side length of the domain, fixes the wavenumber range.
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        /// Also tabulate scan against reference polynomial on an NxN log grid of (d1, d2), d3 = d1.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Refinement study against the config's manufactured solution.
    Convergence {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64])]
        levels: Vec<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Model parameters; defaults are the Example 2 set, or the `[model]`
/// section of `--config`.
#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Recruitment `A`.
    #[arg(long, short = 'A')]
    recruitment: Option<f64>,
    /// Treatment rate `r`.
    #[arg(long, short = 'r')]
    treatment: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<ModelParams> {
        let mut p = match &self.config {
            Some(path) => RunConfig::load(path)?.params(),
            None => commands::example2_params(),
        };
        if let Some(v) = self.alpha {
            p.alpha_incidence = v;
        }
        if let Some(v) = self.mu {
            p.mu = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.recruitment {
            p.recruitment = v;
        }
        if let Some(v) = self.treatment {
            p.treatment = v;
        }
        p.validate()?;
        Ok(p)
    }
}

fn parse_point(s: &str) -> Result<PointChoice> {
    match s.to_ascii_lowercase().as_str() {
        "e1" => Ok(PointChoice::E1),
        "e2" => Ok(PointChoice::E2),
        other => {
            let v: Vec<f64> = other.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>()?;
            match v.as_slice() {
                [u, v, w] => Ok(PointChoice::At([*u, *v, *w])),
                _ => bail!("--point expects e1, e2 or u,v,w"),
            }
        }
    }
}

/// Writes to stdout; a closed pipe (`epifv ... | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let root = cli.out_root.as_deref();
    match cli.command {
        Command::Run { config, seed, out_dir } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.override_seed(s)?;
            }
            let dir = commands::resolve_out_dir(out_dir.as_deref(), &cfg, &config, root);
            let report = commands::cmd_run(&cfg, &dir)?;
            emit(&report.describe())?;
        }
        Command::Equilibria { params, sweep_alpha } => {
            emit(&commands::cmd_equilibria(params.resolve()?, &sweep_alpha))?;
        }
        Command::Stability { params, d1, d2, d3, point, length, grid } => {
            let p = params.resolve()?;
            let choice = parse_point(&point)?;
            let k2 = commands::k2_grid(length);
            emit(&commands::cmd_stability(&p, choice, [d1, d2, d3], &k2)?)?;
            if let Some(n) = grid {
                if n < 2 {
                    bail!("--grid needs at least 2 points per axis");
                }
                let at = commands::resolve_point(&p, choice)?;
                let cells = commands::turing_table(
                    &p,
                    at,
                    &commands::log_grid(1e-3, 1e2, n),
                    &commands::log_grid(1e-5, 1e1, n),
                    &k2,
                )?;
                emit(&commands::format_turing_table(&cells))?;
            }
        }
        Command::Convergence { config, levels, out_dir } => {
            let cfg = RunConfig::load(&config)?;
            let dir = commands::resolve_out_dir(out_dir.as_deref(), &cfg, &config, root);
            let (_, text) = commands::cmd_convergence(&cfg, &levels, Some(Path::new(&dir)))?;
            emit(&text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

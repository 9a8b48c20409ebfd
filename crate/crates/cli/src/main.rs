mod commands;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flockstab_core::BoundaryType;

/// Stability analysis and simulation of heterogeneous vehicle flocks.
#[derive(Parser, Debug)]
#[command(name = "flockstab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Flock specification (JSON)
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory, created if absent
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overwrite existing output files
    #[arg(long)]
    pub force: bool,
}

fn parse_bc(s: &str) -> Result<BoundaryType, String> {
    s.parse::<BoundaryType>().map_err(|e| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the necessary conditions; exit 0 if they hold, 2 if
    /// instability is certified
    Check {
        #[command(flatten)]
        spec: SpecArgs,
        /// Zero tolerance for the condition values
        #[arg(long, default_value_t = flockstab_core::conditions::DEFAULT_CONDITION_TOL)]
        tol: f64,
        /// Also write conditions.json here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Periodic spectrum and stability verdict
    Spectrum {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Cells per agent type
        #[arg(long, default_value_t = 60)]
        n: usize,
        #[arg(long, default_value_t = flockstab_core::spectral::DEFAULT_CLASSIFY_TOL)]
        tol: f64,
    },
    /// Line simulation from the leader kick
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Cells per agent type
        #[arg(long, default_value_t = 60)]
        n: usize,
        /// Boundary type, 1 or 2
        #[arg(long, default_value = "1", value_parser = parse_bc)]
        bc: BoundaryType,
        #[arg(long, default_value_t = flockstab_core::simulation::DEFAULT_DT)]
        dt: f64,
        /// Final time; defaults to 3 N
        #[arg(long)]
        tmax: Option<f64>,
    },
    /// Transient magnitude against flock size
    Scan {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Vehicle counts, comma separated
        #[arg(long = "N-list", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value = "1", value_parser = parse_bc)]
        bc: BoundaryType,
        #[arg(long, default_value_t = flockstab_core::simulation::DEFAULT_DT)]
        dt: f64,
        /// Final time for every run; defaults to 3 N per run
        #[arg(long)]
        tmax: Option<f64>,
    },
    /// Small-root curves of the characteristic polynomial near the origin
    Rootcurves {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = flockstab_core::rootcurves::DEFAULT_T_MIN)]
        phi_min: f64,
        #[arg(long, default_value_t = flockstab_core::rootcurves::DEFAULT_T_MAX)]
        phi_max: f64,
        #[arg(long, default_value_t = flockstab_core::rootcurves::DEFAULT_POINTS)]
        phi_points: usize,
    },
    /// Rerun a reference figure from the built-in fixtures
    Reproduce {
        /// fig1a, fig1b, fig2a, fig2b, fig3a, fig3b or fig3c
        figure: String,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FLOCKSTAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("FLOCKSTAB_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Check { spec, tol, out, force } => commands::check(&spec, tol, out.as_deref(), force),
        Command::Spectrum { spec, out, n, tol } => commands::spectrum(&spec, &out, n, tol),
        Command::Simulate {
            spec,
            out,
            n,
            bc,
            dt,
            tmax,
        } => commands::simulate(&spec, &out, n, bc, dt, tmax),
        Command::Scan {
            spec,
            out,
            n_list,
            bc,
            dt,
            tmax,
        } => commands::scan(&spec, &out, &n_list, bc, dt, tmax),
        Command::Rootcurves {
            spec,
            out,
            phi_min,
            phi_max,
            phi_points,
        } => commands::rootcurves(&spec, &out, phi_min, phi_max, phi_points),
        Command::Reproduce { figure, out } => reproduce::run(&figure, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

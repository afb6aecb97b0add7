use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use commands::CliError;

#[derive(Parser)]
#[command(name = "hbcomplex", version, about = "Exactness, Maxwell spectra, inf-sup and cavity runs on hierarchical B-spline meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for modular-rank primes and random sample points.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Dimensions of the hierarchical spaces and the Euler residual.
    Dims {
        #[arg(required = true)]
        meshes: Vec<PathBuf>,
    },
    /// Cohomology, per-level subgrid comparison and local assumptions.
    Exactness { mesh: PathBuf },
    /// Curl-curl spectrum, mixed-form zero counts and spurious modes.
    MaxwellEig {
        mesh: PathBuf,
        #[arg(long, default_value_t = hbcomplex::eigensolve::DEFAULT_ZERO_TOL)]
        zero_tol: f64,
        #[arg(long, default_value_t = 0.02)]
        spurious_tol: f64,
        #[arg(long, default_value_t = 50)]
        first_n: usize,
    },
    /// Inf-sup constant of the divergence-conforming Stokes pair, per mesh.
    Infsup {
        #[arg(required = true)]
        meshes: Vec<PathBuf>,
        #[command(flatten)]
        physics: Physics,
    },
    /// Creeping lid-driven cavity.
    Cavity {
        mesh: PathBuf,
        #[command(flatten)]
        physics: Physics,
        /// Vorticity probe `x,y`.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 0.95])]
        probe: Vec<f64>,
        /// Random points at which |div u| is sampled.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Mesh spec from a built-in family.
    Generate {
        /// diagonal, three_lines, three_lines_bulge, bulge, corners or custom.
        name: String,
        /// Level-0 elements per direction.
        #[arg(long)]
        level0: usize,
        /// 0-form degree in both directions.
        #[arg(long)]
        degree: usize,
        /// Family parameters as a JSON object.
        #[arg(long, default_value = "{}")]
        params: String,
        #[arg(long)]
        side: Option<f64>,
        #[arg(long)]
        note: Option<String>,
    },
}

#[derive(Args, Clone, Copy)]
struct Physics {
    /// Nitsche penalty; defaults to 5 times the degree.
    #[arg(long)]
    cpen: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let physics = |p: &Physics| commands::physics(p.cpen, p.nu);
    let out = match &cli.command {
        Command::Dims { meshes } => commands::dims(meshes)?,
        Command::Exactness { mesh } => commands::exactness(mesh, cli.seed)?,
        Command::MaxwellEig { mesh, zero_tol, spurious_tol, first_n } => {
            commands::maxwell(mesh, *zero_tol, *spurious_tol, *first_n)?
        }
        Command::Infsup { meshes, physics: p } => commands::infsup(meshes, &physics(p))?,
        Command::Cavity { mesh, physics: p, probe, samples } => {
            commands::cavity(mesh, &physics(p), [probe[0], probe[1]], *samples, cli.seed)?
        }
        Command::Generate { name, level0, degree, params, side, note } => {
            commands::generate(name, *level0, *degree, params, *side, note.clone())?
        }
    };
    out.emit(cli.format, cli.out.as_deref())
}

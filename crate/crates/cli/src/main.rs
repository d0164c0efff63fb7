use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use flexspec_cli::config::default_seed;
use flexspec_cli::{run, ExperimentConfig, ExperimentKind};
use flexspec_core::BoundaryCondition;

#[derive(Parser)]
#[command(name = "flexspec", version, about = "Flexible polyhedra, tents, Fedosov coefficients and Laplace spectra")]
struct Cli {
    /// Directory for CSV tables and the JSON summary.
    #[arg(long, global = true, default_value = "flexspec-out")]
    out_dir: PathBuf,
    /// Seed for every random choice (eigensolver start blocks).
    #[arg(long, global = true, default_value_t = default_seed())]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// Family JSON, tent construction JSON, or builtin:<four-bar|hexagon|bricard|steffen|cube|square>.
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Output file name inside --out-dir.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Clone)]
struct PolygonArgs {
    /// Polygon JSON vertex loop, or builtin:<square|l-shape|unit-l|rectangle>.
    #[arg(long)]
    polygon: String,
    #[arg(long, default_value = "dirichlet")]
    bc: BoundaryCondition,
    /// Target element size.
    #[arg(long, default_value_t = 0.02)]
    h: f64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Per-sample invariants and coordinates of a flex family.
    Flex {
        #[command(subcommand)]
        cmd: FlexCmd,
    },
    /// Volume, area, mean curvature and angle range along a family.
    Invariants(FamilyArgs),
    /// Tent construction on a flexible polyhedron.
    Tent {
        #[command(subcommand)]
        cmd: TentCmd,
    },
    /// Fedosov coefficients along a family.
    Coeffs {
        #[command(subcommand)]
        cmd: CoeffsCmd,
    },
    /// Finite-element Laplace spectra of polygons.
    Spectrum {
        #[command(subcommand)]
        cmd: SpectrumCmd,
    },
    /// Tent-modified family with constant volume and boundary terms but a varying ridge term.
    Theorem1Demo {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = flexspec_core::tent::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value = "dirichlet")]
        bc: BoundaryCondition,
    },
    /// Run an experiment described by a JSON config file.
    Run {
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum FlexCmd {
    Sample(FamilyArgs),
}

#[derive(Subcommand)]
enum TentCmd {
    /// Build the tent-modified family and write the construction.
    Build {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = flexspec_core::tent::DEFAULT_DELTA)]
        delta: f64,
    },
    /// Check the tent conditions on samples of a construction file.
    Verify(FamilyArgs),
}

#[derive(Subcommand)]
enum CoeffsCmd {
    Track {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "dirichlet")]
        bc: BoundaryCondition,
    },
}

#[derive(Subcommand)]
enum SpectrumCmd {
    /// Smallest eigenvalues of a polygon.
    Solve {
        #[command(flatten)]
        polygon: PolygonArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Spectra along a planar flex family with two-mesh error bars.
    Sweep {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "dirichlet")]
        bc: BoundaryCondition,
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Counting function against the two-term Weyl prediction.
    VerifyWeyl {
        #[command(flatten)]
        polygon: PolygonArgs,
        #[arg(long, default_value_t = 10.0)]
        k_min: f64,
        #[arg(long, default_value_t = 40.0)]
        k_max: f64,
    },
    /// Corner coefficient from the order-2 Riesz mean of extrapolated spectra.
    Corner {
        #[command(flatten)]
        polygon: PolygonArgs,
        #[arg(long, default_value_t = 15.0)]
        k_min: f64,
        #[arg(long, default_value_t = 35.0)]
        k_max: f64,
        #[arg(long, default_value_t = 1600.0)]
        lambda_max: f64,
    },
}

fn with_family(kind: ExperimentKind, a: FamilyArgs) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    c.family = Some(a.family);
    c.samples = a.samples;
    c.out = a.out;
    c
}

fn with_polygon(kind: ExperimentKind, a: PolygonArgs) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    c.polygon = Some(a.polygon);
    c.bc = a.bc;
    c.h = a.h;
    c.out = a.out;
    c
}

fn config(cli: Cli) -> Result<ExperimentConfig> {
    let mut c = match cli.command {
        Command::Run { config } => return ExperimentConfig::load(config),
        Command::Flex { cmd: FlexCmd::Sample(a) } => with_family(ExperimentKind::FlexSample, a),
        Command::Invariants(a) => with_family(ExperimentKind::Invariants, a),
        Command::Tent { cmd } => match cmd {
            TentCmd::Build { family, epsilon, delta } => {
                let mut c = with_family(ExperimentKind::TentBuild, family);
                c.epsilon = epsilon;
                c.delta = delta;
                c
            }
            TentCmd::Verify(a) => with_family(ExperimentKind::TentVerify, a),
        },
        Command::Coeffs { cmd: CoeffsCmd::Track { family, bc } } => {
            let mut c = with_family(ExperimentKind::Coeffs, family);
            c.bc = bc;
            c
        }
        Command::Spectrum { cmd } => match cmd {
            SpectrumCmd::Solve { polygon, n } => {
                let mut c = with_polygon(ExperimentKind::SpectrumSolve, polygon);
                c.n = n;
                c
            }
            SpectrumCmd::Sweep { family, bc, h, n } => {
                let mut c = with_family(ExperimentKind::SpectrumSweep, family);
                c.bc = bc;
                c.h = h;
                c.n = n;
                c
            }
            SpectrumCmd::VerifyWeyl { polygon, k_min, k_max } => {
                let mut c = with_polygon(ExperimentKind::VerifyWeyl, polygon);
                c.k_range = [k_min, k_max];
                c
            }
            SpectrumCmd::Corner {
                polygon,
                k_min,
                k_max,
                lambda_max,
            } => {
                let mut c = with_polygon(ExperimentKind::Corner, polygon);
                c.k_range = [k_min, k_max];
                c.lambda_max = lambda_max;
                c
            }
        },
        Command::Theorem1Demo {
            family,
            epsilon,
            delta,
            bc,
        } => {
            let mut c = with_family(ExperimentKind::Theorem1Demo, family);
            c.epsilon = epsilon;
            c.delta = delta;
            c.bc = bc;
            c
        }
    };
    c.out_dir = cli.out_dir;
    c.seed = cli.seed;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(cli).and_then(|c| run(&c));
    match result {
        Ok(s) => {
            println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
            if s.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("flexspec: one or more checks failed (see summary.json)");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("flexspec: {e:#}");
            ExitCode::from(2)
        }
    }
}

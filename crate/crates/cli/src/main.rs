//! `meshopt`: sample, initialize, train and analyze MZI meshes from the shell.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use meshopt::analysis::{write_checkerboard_csv, write_propagation_csv};
use meshopt::mesh::propagate_fields_with_errors;
use meshopt::train::{ErrorModel, InitKind};
use meshopt::{
    bandsize, clements_decompose, gram_schmidt_haar, mesh_unitary, permuting_spec, rectangular_spec,
    train::train_unitary_from, triangular_spec, BeamsplitterErrors, ComplexMatrix, Mesh, MeshSpec, Quantity,
    SeededRng, TrainConfig,
};

#[derive(Parser)]
#[command(name = "meshopt", version, about = "Simulate and optimize universal MZI meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Arch {
    /// Rectangular mesh with N columns.
    Rm,
    /// Redundant rectangular mesh with N + extra-layers columns.
    Rrm,
    /// Permuting rectangular mesh.
    Prm,
    /// Triangular mesh.
    Triangular,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Haar,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Haar-random unitary.
    SampleHaar {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a mesh and initialize its phases.
    Init {
        #[arg(long, value_enum)]
        arch: Arch,
        #[arg(long)]
        n: usize,
        /// Extra columns beyond N (rrm only).
        #[arg(long)]
        extra_layers: Option<usize>,
        /// Comma-separated permutation block order, e.g. `2,4,3,1` (prm only).
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value = "haar")]
        init: Init,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the transfer matrix of a mesh.
    Unitary {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        errors: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decompose a unitary into rectangular-mesh phases.
    Decompose {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a mesh toward a target unitary, starting from the mesh's phases.
    Train {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace_out: PathBuf,
    },
    /// Print both eta-bandsize readings of a matrix as JSON.
    Bandsize {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 0.001)]
        eta: f64,
    },
    /// Field magnitudes through the mesh for light entering one port.
    Propagate {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        input: usize,
        #[arg(long)]
        errors: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-MZI quantity laid out on the mesh grid.
    Checkerboard {
        #[arg(long)]
        mesh: PathBuf,
        /// One of theta, xi, alpha, avg-r.
        #[arg(long)]
        quantity: Quantity,
        #[arg(long)]
        out: PathBuf,
    },
    /// Beamsplitter error operations.
    #[command(subcommand)]
    Errors(ErrorsCommand),
}

#[derive(Subcommand)]
enum ErrorsCommand {
    /// Sample Gaussian split-ratio errors, the same for both beamsplitters of an MZI.
    Sample {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn build_spec(arch: Arch, n: usize, extra: Option<usize>, order: Option<&[usize]>) -> Result<MeshSpec> {
    if extra.is_some() && !matches!(arch, Arch::Rrm) {
        bail!("--extra-layers applies only to rrm");
    }
    if order.is_some() && !matches!(arch, Arch::Prm) {
        bail!("--order applies only to prm");
    }
    Ok(match arch {
        Arch::Rm => rectangular_spec(n, n)?,
        Arch::Rrm => {
            let extra = extra.context("rrm needs --extra-layers")?;
            rectangular_spec(n, n + extra)?
        }
        Arch::Prm => permuting_spec(n, order)?,
        Arch::Triangular => triangular_spec(n)?,
    })
}

fn read_errors(path: Option<&PathBuf>, mesh: &Mesh) -> Result<BeamsplitterErrors> {
    match path {
        Some(p) => {
            let e = BeamsplitterErrors::read_json(p).with_context(|| format!("reading {}", p.display()))?;
            e.check(&mesh.spec)?;
            Ok(e)
        }
        None => Ok(BeamsplitterErrors::none(&mesh.spec)),
    }
}

fn read_mesh(path: &PathBuf) -> Result<Mesh> {
    Mesh::read_json(path).with_context(|| format!("reading mesh {}", path.display()))
}

fn read_matrix(path: &PathBuf) -> Result<ComplexMatrix> {
    ComplexMatrix::read_json(path).with_context(|| format!("reading matrix {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SampleHaar { n, seed, out } => {
            let u = gram_schmidt_haar(n, &mut SeededRng::new(seed))?;
            u.write_json(&out)?;
        }
        Command::Init {
            arch,
            n,
            extra_layers,
            order,
            init,
            seed,
            out,
        } => {
            let spec = build_spec(arch, n, extra_layers, order.as_deref())?;
            // Same init substream as training with this seed.
            let mut config = TrainConfig::new(0.0025, 1, seed);
            config.init = match init {
                Init::Haar => InitKind::Haar,
                Init::Uniform => InitKind::Uniform,
            };
            let params = config.initial_params(&spec);
            Mesh::new(spec, params)?.write_json(&out)?;
        }
        Command::Unitary { mesh, errors, out } => {
            let mesh = read_mesh(&mesh)?;
            let errors = read_errors(errors.as_ref(), &mesh)?;
            mesh_unitary(&mesh.spec, &mesh.params, &errors)?.write_json(&out)?;
        }
        Command::Decompose { target, out } => {
            let u = read_matrix(&target)?;
            meshopt::io::write_json(&out, &clements_decompose(&u)?)?;
        }
        Command::Train {
            mesh,
            target,
            config,
            trace_out,
        } => {
            let mesh = read_mesh(&mesh)?;
            let target = read_matrix(&target)?;
            let config = TrainConfig::read_json(&config).with_context(|| format!("reading config {}", config.display()))?;
            let errors = config.sample_errors(&mesh.spec);
            let trace = train_unitary_from(&mesh.spec, mesh.params, &errors, &target, &config)?;
            trace.write_dir(&trace_out)?;
            eprintln!(
                "test cost {:.6e} -> {:.6e}",
                trace.history.initial_test_cost(),
                trace.final_test_cost()
            );
        }
        Command::Bandsize { matrix, eta } => {
            let u = read_matrix(&matrix)?;
            let b = bandsize(&u, eta)?;
            let report = serde_json::json!({
                "n": b.n,
                "eta": eta,
                "global": b.global,
                "global_fraction": b.global_fraction(),
                "per_row_mean": b.per_row_mean,
                "per_row_fraction": b.per_row_fraction(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Propagate {
            mesh,
            input,
            errors,
            out,
        } => {
            let mesh = read_mesh(&mesh)?;
            let errors = read_errors(errors.as_ref(), &mesh)?;
            let fields = propagate_fields_with_errors(&mesh.spec, &mesh.params, &errors, input)?;
            write_propagation_csv(&out, &fields)?;
        }
        Command::Checkerboard { mesh, quantity, out } => {
            let mesh = read_mesh(&mesh)?;
            write_checkerboard_csv(&out, &mesh, quantity)?;
        }
        Command::Errors(ErrorsCommand::Sample { mesh, sigma, seed, out }) => {
            let mesh = read_mesh(&mesh)?;
            // Same error substream as training with this seed and sigma.
            let mut config = TrainConfig::new(0.0025, 1, seed);
            config.error_model = ErrorModel::Gaussian { sigma };
            config.validate()?;
            config.sample_errors(&mesh.spec).write_json(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

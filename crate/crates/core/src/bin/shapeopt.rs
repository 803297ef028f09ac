//! Command-line front end for the shape optimization pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shapeopt::pipeline::{
    cmd_evaluate, cmd_export, cmd_optimize, cmd_preprocess, cmd_reconstruct, cmd_train, OptimizeSummary, Overrides,
    PipelineError, RunConfig,
};

#[derive(Parser)]
#[command(name = "shapeopt", version, about = "Latent-space shape optimization with an SDF auto-decoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Skip invalid input meshes instead of aborting.
    #[arg(long, global = true)]
    skip_invalid: bool,
    /// Margin of the latent search box, relative to the code range.
    #[arg(long, global = true)]
    bounds_margin: Option<f64>,
    /// Lattice resolution for reconstruction and export.
    #[arg(long, global = true)]
    resolution: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Validate, normalize and sample the input shapes.
    Preprocess,
    /// Fit the decoder and latent codes.
    Train,
    /// Decode every training code into a mesh.
    Reconstruct,
    /// Write reconstruction metrics to report.csv.
    Evaluate,
    /// Run NSGA-II in the latent space.
    Optimize,
    /// Re-extract the final front at the run resolution.
    Export,
    /// All stages in order.
    Run,
}

fn print_front(s: &OptimizeSummary) {
    println!(
        "{} generations, {} evaluations, {} designs on the final front",
        s.generations,
        s.evaluations,
        s.front.len()
    );
    for (k, d) in s.front.iter().enumerate() {
        let values: Vec<String> = s
            .objective_names
            .iter()
            .zip(&d.objectives)
            .map(|(n, v)| format!("{n}={v:.6}"))
            .collect();
        println!("  design {k}: {}", values.join(" "));
    }
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| PipelineError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path)?.resolve(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        bounds_margin: cli.bounds_margin,
        resolution: cli.resolution,
    })?;
    let stages: &[Command] = match cli.command {
        Command::Run => &[
            Command::Preprocess,
            Command::Train,
            Command::Reconstruct,
            Command::Evaluate,
            Command::Optimize,
            Command::Export,
        ],
        ref one => std::slice::from_ref(one),
    };
    for stage in stages {
        match stage {
            Command::Preprocess => {
                let s = cmd_preprocess(&cfg, cli.skip_invalid)?;
                for shape in &s.shapes {
                    match &shape.problem {
                        None => println!("{}: watertight, {} samples", shape.id, shape.samples),
                        Some(p) => println!("{}: skipped ({p})", shape.id),
                    }
                }
            }
            Command::Train => {
                let s = cmd_train(&cfg)?;
                println!("trained {} epochs, final clip loss {:.6}", s.epochs, s.final_clip);
                for (id, z) in s.ids.iter().zip(&s.codes) {
                    println!("  {id}: {z:?}");
                }
            }
            Command::Reconstruct => {
                for p in cmd_reconstruct(&cfg)? {
                    println!("wrote {}", p.display());
                }
            }
            Command::Evaluate => print!("{}", cmd_evaluate(&cfg)?.to_csv()),
            Command::Optimize => print_front(&cmd_optimize(&cfg)?),
            Command::Export => println!("exported {} meshes", cmd_export(&cfg)?.len()),
            Command::Run => unreachable!("expanded above"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use bebm::cli::{run, CliError, Command, Context};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bebm", version, about = "Born machine tomography of Rydberg and XY ground states")]
struct Args {
    /// Experiment recipe (JSON).
    #[arg(long, global = true)]
    recipe: Option<PathBuf>,
    /// Override the recipe's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    emit_plots: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ground state at a point and/or along a sweep.
    GroundTruth,
    /// Overlaps and entanglement over a (Δ/Ω, R_b/a) grid.
    PhaseMap,
    /// Sweep and report the entanglement maximum.
    LocateCritical,
    /// Draw measurement datasets.
    Sample {
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Train a Born machine.
    Train {
        #[arg(long, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Metrics for a trained model against a reference state.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, num_args = 0..)]
        data: Vec<PathBuf>,
    },
    /// Basis × field comparison table.
    Matrix,
    /// Infidelity against dataset size and system size.
    Scaling,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = match args.cmd {
        Cmd::GroundTruth => Command::GroundTruth,
        Cmd::PhaseMap => Command::PhaseMap,
        Cmd::LocateCritical => Command::LocateCritical,
        Cmd::Sample { state } => Command::Sample { state },
        Cmd::Train { data, reference } => Command::Train { data, reference },
        Cmd::Evaluate { model, reference, data } => Command::Evaluate { model, reference, data },
        Cmd::Matrix => Command::Matrix,
        Cmd::Scaling => Command::Scaling,
    };
    let result = (|| -> Result<Vec<PathBuf>, CliError> {
        let recipe = args.recipe.ok_or_else(|| CliError::Usage("--recipe is required".into()))?;
        if let Some(j) = args.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build_global()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        let ctx = Context::load(&recipe, args.seed, args.out.as_deref(), args.emit_plots)?;
        run(&ctx, &cmd)
    })();
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bebm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maslov_cli::{config, run, to_json_string, write_outputs, QueryKind, RunError};

#[derive(Parser)]
#[command(name = "maslov", version, about = "Count eigenvalues of Hamiltonian systems on the line via Maslov indices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// N([lambda1, lambda2)) from the Maslov box and monotone kernel sums.
    Count(Common),
    /// N((-inf, lambda2)) from the kernel sum at lambda2.
    Below(Common),
    /// The four shelf indices of the Maslov box over [lambda1, lambda2].
    Box(Common),
    /// Conjugate points along x at a fixed lambda.
    Conjugates(Common),
    /// Side-by-side Maslov and finite-difference counts.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// TOML (or JSON) run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for result.json and CSV traces; JSON goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    verbose: bool,
    /// Override query.lambda1.
    #[arg(long, allow_hyphen_values = true)]
    lambda1: Option<f64>,
    /// Override query.lambda2.
    #[arg(long, allow_hyphen_values = true)]
    lambda2: Option<f64>,
    /// Override query.lambda.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
}

fn execute(op: QueryKind, args: Common) -> Result<(), RunError> {
    let level = if args.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).init();
    if let Some(k) = args.workers {
        rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global().map_err(|e| RunError::Io(e.to_string()))?;
    }
    let mut cfg = config::load(&args.config)?;
    cfg.query.lambda1 = args.lambda1.or(cfg.query.lambda1);
    cfg.query.lambda2 = args.lambda2.or(cfg.query.lambda2);
    cfg.query.lambda = args.lambda.or(cfg.query.lambda);
    log::debug!("running {op:?} on {}", args.config.display());
    let out = run(&cfg, op)?;
    match args.out.or_else(|| cfg.output.dir.clone()) {
        Some(dir) => write_outputs(&out, &dir),
        None => {
            print!("{}", to_json_string(&out.document));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (op, args) = match cli.command {
        Command::Count(a) => (QueryKind::CountInterval, a),
        Command::Below(a) => (QueryKind::CountBelow, a),
        Command::Box(a) => (QueryKind::MaslovBox, a),
        Command::Conjugates(a) => (QueryKind::ConjugatePoints, a),
        Command::Oracle(a) => (QueryKind::OracleCompare, a),
    };
    match execute(op, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

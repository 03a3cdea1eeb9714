use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use treeitp::oracle::Budget;
use treeitp::pipeline::{run, ColouringChoice, RunConfig, Validation, EXIT_INPUT};

/// Compute tree interpolants from a resolution proof with quantifier
/// instantiations.
#[derive(Parser, Debug)]
#[command(name = "treeitp", version)]
struct Args {
    /// Problem file: declarations, the tree and optional colours.
    problem: PathBuf,
    /// Proof file; may be omitted if the problem file holds the proof.
    proof: Option<PathBuf>,
    /// `heuristic`, `file` or `random[:seed]`.
    #[arg(long, default_value = "heuristic")]
    colouring: String,
    /// Seed for `--colouring random` without an explicit seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Level::Off)]
    validate: Level,
    /// Print simplified final interpolants.
    #[arg(long)]
    simplify: bool,
    /// Also print the vector of every proof node.
    #[arg(long)]
    dump_partials: bool,
    /// Largest domain for finite-model search.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    domain_size: Option<u64>,
    /// Write results here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Level {
    Off,
    Syntactic,
    Full,
}

fn colouring(spec: &str, seed: Option<u64>) -> Result<ColouringChoice, String> {
    match spec.split_once(':') {
        None => match spec {
            "heuristic" => Ok(ColouringChoice::Heuristic),
            "file" => Ok(ColouringChoice::File),
            "random" => seed
                .map(ColouringChoice::Random)
                .ok_or_else(|| "random colouring needs a seed (random:N or --seed N)".into()),
            _ => Err(format!("unknown colouring {spec}")),
        },
        Some(("random", n)) => n
            .parse()
            .map(ColouringChoice::Random)
            .map_err(|_| format!("bad seed {n}")),
        _ => Err(format!("unknown colouring {spec}")),
    }
}

fn config(args: &Args) -> Result<RunConfig, String> {
    let mut budget = Budget::default();
    if let Ok(spec) = std::env::var("TREEITP_BUDGET") {
        budget = budget.with_overrides(&spec)?;
    }
    if let Some(k) = args.domain_size {
        budget.domain_size = k as usize;
    }
    Ok(RunConfig {
        colouring: colouring(&args.colouring, args.seed)?,
        validate: match args.validate {
            Level::Off => Validation::Off,
            Level::Syntactic => Validation::Syntactic,
            Level::Full => Validation::Full,
        },
        simplify: args.simplify,
        dump_partials: args.dump_partials,
        budget,
    })
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let fail = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(EXIT_INPUT as u8)
    };
    let cfg = match config(&args) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let problem = match read(&args.problem) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let proof = match args.proof.as_ref().map(read).transpose() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let result = run(&cfg, &problem, proof.as_deref());
    for d in &result.diagnostics {
        eprintln!("{d}");
    }
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &result.output) {
                return fail(format!("{}: {e}", path.display()));
            }
        }
        None => print!("{}", result.output),
    }
    ExitCode::from(result.code as u8)
}

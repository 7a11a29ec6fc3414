use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use orbidouble::{run, Command, Format, JobConfig};

#[derive(Parser)]
#[command(
    name = "orbidouble",
    version,
    about = "Inertia, Drinfeld double and descent computations over finite group actions"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inertia pairs, orbits and stabilizers (and the inertia atlas when an atlas is given)
    Inertia(Args),
    /// Simple counts for the base, the inertia and the double
    Simples(Args),
    /// Run every verification suite
    Verify(Args),
    /// Convolution table of inertia simples and braiding scalars
    Fusion(Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    input: PathBuf,
    /// Field characteristic; must be a splitting prime for the group
    #[arg(long)]
    prime: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random instances per randomized suite
    #[arg(long, default_value_t = 16)]
    trials: usize,
    /// Largest search space (log2 of candidates) the enumeration oracle will visit
    #[arg(long, default_value_t = 40)]
    budget_bits: u32,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Inertia(a) => (Command::Inertia, a),
        Cmd::Simples(a) => (Command::Simples, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Fusion(a) => (Command::Fusion, a),
    };
    let mut config = JobConfig::new(args.input, command);
    config.prime = args.prime;
    config.seed = args.seed;
    config.trials = args.trials;
    config.budget_bits = args.budget_bits;
    config.output = args.output;
    config.format = match args.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    match run(&config) {
        Ok(outcome) => {
            if config.output.is_none() {
                print!("{}", outcome.rendered);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

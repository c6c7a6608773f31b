//! `fut`: transpile PyLite, run programs on the dataflow executor and
//! benchmark the corpus algorithms.

mod bench;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use fut_core::executor::Mode;

use output::Failure;

#[derive(Parser, Debug)]
#[command(name = "fut", version, about = "Futurized array-language toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transpile a PyLite file to PhySL.
    Transpile {
        input: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile and evaluate a PhySL or PyLite (.py) program.
    Run(RunArgs),
    /// Time a corpus algorithm across worker counts.
    Bench {
        #[command(subcommand)]
        algo: bench::Algo,
    },
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub program: PathBuf,
    /// Kernel to evaluate; defaults to the top-level code or the only kernel.
    #[arg(long)]
    pub entry: Option<String>,
    /// Entry argument `name=type:value` with type int, float, seed or csv.
    #[arg(long = "arg", value_name = "NAME=TYPE:VALUE")]
    pub args: Vec<String>,
    /// Worker threads for dataflow mode.
    #[arg(long, env = "FUT_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    #[arg(long, default_value = "dataflow")]
    pub mode: Mode,
    /// Write per-node counters as CSV.
    #[arg(long, value_name = "PATH")]
    pub counters: Option<PathBuf>,
    /// Write a trace-event JSON file.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Write the execution trees with counters (.json for JSON, DOT otherwise).
    #[arg(long, value_name = "PATH")]
    pub dump_tree: Option<PathBuf>,
    /// Fold constant subtrees before evaluation.
    #[arg(long)]
    pub fold: bool,
    /// Maximum call depth.
    #[arg(long)]
    pub max_frames: Option<usize>,
    /// Maximum iterations of any single loop.
    #[arg(long)]
    pub max_loop_iterations: Option<u64>,
    /// Enable diagnostic primitives such as sleep_ms.
    #[arg(long)]
    pub test_primitives: bool,
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Transpile { input, output } => run::transpile(&input, output.as_deref()),
        Command::Run(args) => run::run(&args),
        Command::Bench { algo } => bench::bench(&algo),
    }
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(("run", sub)) = matches.subcommand() {
        let explicit = sub.value_source("threads") == Some(ValueSource::CommandLine);
        if explicit && sub.get_one::<Mode>("mode") == Some(&Mode::Sequential) {
            let f = Failure::usage("--threads conflicts with --mode sequential");
            eprintln!("{f}");
            return f.exit_code();
        }
    }
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}

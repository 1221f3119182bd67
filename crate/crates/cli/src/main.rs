mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    BuildArgs, DiscordArgs, EvalArgs, ExportArgs, GenerateArgs, RankArgs, ScoreArgs, SweepArgs,
};

/// Graph-based subsequence anomaly detection.
#[derive(Debug, Parser)]
#[command(name = "s2g", version, args_override_self = true)]
struct Cli {
    /// TOML or JSON file of flag values; flags on the command line win.
    /// Keys are long flag names, either top-level or under a table named
    /// after the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<std::path::PathBuf>,

    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic SRW series with annotated anomalies.
    Generate(GenerateArgs),
    /// Build a pattern graph from a series.
    Build(BuildArgs),
    /// Score every subsequence of a series against a graph.
    Score(ScoreArgs),
    /// Rank the least normal subsequences of a profile.
    Rank(RankArgs),
    /// Top-k accuracy of a ranking against annotations.
    Eval(EvalArgs),
    /// Run a parameter sweep described by a TOML or JSON file.
    Sweep(SweepArgs),
    /// Write a graph as DOT or JSON.
    ExportGraph(ExportArgs),
    /// Brute-force nearest-neighbour (discord) baseline.
    Discord(DiscordArgs),
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_DATA);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Build(a) => commands::build(a),
        Command::Score(a) => commands::score(a),
        Command::Rank(a) => commands::rank(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::ExportGraph(a) => commands::export_graph(a),
        Command::Discord(a) => commands::discord(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

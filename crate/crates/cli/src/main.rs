use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rvrcheck_cli::{emit, exit_code, parse_scenario, run, Format, Mode, Overrides};

#[derive(Parser)]
#[command(name = "rvrcheck", version, about = "Decide whether a quantum scenario admits a noncontextual hidden-variables model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis the scenario requests
    Check(Common),
    /// CHSH evaluation, settings search and hidden-variable models
    Bell(Common),
    /// Entropies and the information inequality
    Entropy(Common),
    /// Cross-check the completeness decision with exact rational arithmetic
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Largest commuting subset whose probability is computed
    #[arg(long)]
    max_subset: Option<usize>,
    /// Search Bloch vectors over the whole sphere instead of the x-z plane
    #[arg(long)]
    full_sphere: bool,
    /// Add a timestamp to the report (breaks byte-identical output)
    #[arg(long)]
    timestamp: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Structured,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, opts) = match cli.command {
        Command::Check(c) => (Mode::Check, c),
        Command::Bell(c) => (Mode::Bell, c),
        Command::Entropy(c) => (Mode::Entropy, c),
        Command::Oracle(c) => (Mode::Oracle, c),
    };
    let text = match std::fs::read_to_string(&opts.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("rvrcheck: cannot read {}: {e}", opts.file.display());
            return ExitCode::from(2);
        }
    };
    let scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("rvrcheck: {}: {e}", opts.file.display());
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides {
        max_subset: opts.max_subset,
        full_sphere: opts.full_sphere,
        timestamp: opts.timestamp.then(|| chrono::Utc::now().to_rfc3339()),
    };
    let report = run(&scenario, mode, &overrides);
    let format = match opts.format {
        OutputFormat::Text => Format::Text,
        OutputFormat::Structured => Format::Structured,
    };
    print!("{}", emit(&report, format));
    ExitCode::from(exit_code(&report) as u8)
}

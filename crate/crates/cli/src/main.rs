//! `admnet`: command-line driver for the admittance network library.

use std::process::ExitCode;

use admnet_cli::error::CliError;
use admnet_cli::report::Format;
use admnet_cli::{commands, FiniteArgs, FreeGroupArgs, InfiniteArgs, TreeArgs};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "admnet",
    version,
    about = "Green kernels and transience of complex admittance networks"
)]
struct Cli {
    /// Output format; csv is available for sweep tables only.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dirichlet problem, admittance and series on a finite network file.
    Finite(FiniteArgs),
    /// Exhaustion of an infinite network given by a generator URI.
    Infinite(InfiniteArgs),
    /// Martin kernels and boundary distributions on a tree generator.
    Tree(TreeArgs),
    /// Convolution norm on a free group.
    Freegroup(FreeGroupArgs),
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let report = match &cli.command {
        Command::Finite(a) => commands::finite(a)?,
        Command::Infinite(a) => commands::infinite(a)?,
        Command::Tree(a) => commands::tree(a)?,
        Command::Freegroup(a) => commands::freegroup(a)?,
    };
    let stdout = std::io::stdout();
    report.write(cli.format, &mut stdout.lock())?;
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for c in report.failed_checks() {
            eprintln!(
                "check failed: {} residual {:e} > {:e}",
                c.name, c.residual, c.tolerance
            );
        }
        Ok(ExitCode::from(4))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

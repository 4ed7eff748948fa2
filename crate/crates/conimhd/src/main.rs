use clap::Parser;
use conimhd::cli::{self, Cli, CliError};

fn main() {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(err) = cli::run(cli, &mut stdout) {
        if !matches!(err, CliError::SuiteFailure) {
            eprintln!("error: {err}");
        }
        std::process::exit(err.exit_code());
    }
}

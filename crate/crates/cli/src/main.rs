use std::process::ExitCode;

use clap::Parser;
use eepareto_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, &cli.config, cli.out.as_deref(), cli.seed) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("eepareto: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use clap::Parser;

use dentfit::cli::{self, Command};

/// Dent inspection toolkit: synthesize, segment, fit, compare and render.
#[derive(Parser)]
#[command(name = "dentfit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn main() {
    let cli = Cli::parse();
    match cli::run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(cli::EXIT_FAILURE);
        }
    }
}

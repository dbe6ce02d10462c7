use clap::Parser;
use compsketch_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("cskl: {e}");
        std::process::exit(e.exit_code());
    }
}

use clap::Parser;
use coupled_hmc_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("coupled-hmc: {e}");
        std::process::exit(e.exit_code());
    }
}

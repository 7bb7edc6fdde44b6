use clap::Parser;

use staketow::cli::{run, RunConfig};

fn main() {
    let config = RunConfig::parse();
    if let Err(failure) = run(config) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}

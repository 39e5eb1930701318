use clap::Parser;

use xygibbs::cli::{run, Args};

fn main() {
    let args = Args::parse();
    std::process::exit(run(&args));
}

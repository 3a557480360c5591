use clap::Parser;

fn main() {
    std::process::exit(swr_cli::run(swr_cli::Cli::parse()));
}

use clap::Parser;

fn main() {
    std::process::exit(bivex::cli::run(bivex::cli::Cli::parse()));
}

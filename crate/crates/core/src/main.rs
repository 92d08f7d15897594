use clap::Parser;

fn main() {
    std::process::exit(formring::cli::main_with(formring::cli::Cli::parse()));
}

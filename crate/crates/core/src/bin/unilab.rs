use clap::Parser;

fn main() {
    std::process::exit(unilab::cli::main_with(unilab::cli::Cli::parse()));
}

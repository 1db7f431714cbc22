use clap::Parser;

fn main() {
    let cli = fedsense::cli::Cli::parse();
    std::process::exit(fedsense::cli::execute(cli));
}

use clap::Parser;

fn main() {
    let cli = belcal::Cli::parse();
    std::process::exit(belcal::dispatch(cli));
}

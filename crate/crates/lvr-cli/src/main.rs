use clap::Parser;

fn main() {
    let cli = lvr_cli::Cli::parse();
    let outcome = lvr_cli::dispatch(cli);
    println!("{}", outcome.stdout);
    std::process::exit(outcome.exit_code);
}

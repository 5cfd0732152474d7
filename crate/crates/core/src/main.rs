use clap::Parser;

fn main() {
    let cli = qrvdp::cli::Cli::parse();
    if let Err(e) = qrvdp::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

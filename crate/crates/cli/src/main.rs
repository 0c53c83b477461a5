use clap::Parser;
use scgrade::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        if let scgrade::CliError::Invariant(items) = &e {
            for item in items {
                eprintln!("  {item}");
            }
        }
        std::process::exit(e.exit_code());
    }
}

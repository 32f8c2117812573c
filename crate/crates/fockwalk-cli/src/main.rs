use clap::Parser;
use fockwalk::error::FockError;

fn main() {
    let cli = fockwalk_cli::Cli::parse();
    if let Err(err) = fockwalk_cli::execute(cli) {
        eprintln!("error: {err:#}");
        // Engine-invariant violations are distinguishable from bad input.
        let code = match err.downcast_ref::<FockError>() {
            Some(e) if e.is_internal() => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}

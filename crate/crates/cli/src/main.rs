use clap::Parser;
use trait_cli::commands::{run, Cli};
use trait_cli::EXIT_RUNTIME;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();

    // TRAIT_THREADS caps the worker pool; results do not depend on it.
    if let Ok(n) = std::env::var("TRAIT_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: {e}");
                    std::process::exit(EXIT_RUNTIME);
                }
            }
            _ => {
                eprintln!("error: TRAIT_THREADS must be a positive integer, got {n:?}");
                std::process::exit(trait_cli::EXIT_VALIDATION);
            }
        }
    }

    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

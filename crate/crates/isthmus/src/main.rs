use clap::Parser;

use isthmus::cli::{run, Cli};

fn main() {
    // ISTHMUS_THREADS caps analysis parallelism; 0 or unset means auto.
    if let Ok(threads) = std::env::var("ISTHMUS_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }

    // Usage problems exit 1; data problems exit 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { 1 } else { 0 };
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

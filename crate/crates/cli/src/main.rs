use clap::Parser;
use gibbs_geom_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "done in {:.2}s (config {}, seed {})",
                report.wall_clock_seconds,
                &report.config_hash[..12],
                report.seed
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

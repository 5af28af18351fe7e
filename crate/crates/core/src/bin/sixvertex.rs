use std::process::ExitCode;

use clap::Parser;
use sixvertex::cli::{exit_code_for, run, Args, RunConfig};

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let cfg = match RunConfig::from_args(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("sixvertex: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    match run(&cfg) {
        Ok(out) => {
            println!("{}", out.render(cfg.out));
            ExitCode::from(out.exit_code(cfg.both_tol()) as u8)
        }
        Err(e) => {
            eprintln!("sixvertex: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

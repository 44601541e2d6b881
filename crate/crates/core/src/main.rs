use std::process::ExitCode;

use clap::Parser;
use linkspy::cli::{run, Args, ExperimentSpec};

fn main() -> ExitCode {
    let args = Args::parse();
    match ExperimentSpec::from_args(&args).and_then(|spec| run(&spec)) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

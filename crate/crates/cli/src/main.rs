use std::process::ExitCode;

use clap::Parser;
use edgeroles_cli::{run, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cfg = RunConfig::parse();
    match run(&cfg) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error\tkind={}\tcommand={}\tmessage={}", e.kind(), cfg.command.name(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

use std::panic;
use std::process::ExitCode;

use clap::Parser;
use coalfix_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    // a panic inside the library is an internal assertion failure
    let report = match panic::catch_unwind(|| run(&cli)) {
        Ok(r) => r,
        Err(_) => return ExitCode::from(2),
    };
    if cli.pretty {
        print!("{}", report.to_pretty());
    } else {
        println!("{}", report.to_json());
    }
    ExitCode::from(report.exit_code() as u8)
}

use std::io;
use std::process::ExitCode;

use clap::Parser;
use lipadam_cli::{dispatch, exit, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::FAILURE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let code = dispatch(cli, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code)
}

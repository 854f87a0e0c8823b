use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use probi::cli::{run, Cli};
use probi::HarnessError;

fn fail(err: &HarnessError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            return fail(&HarnessError::Usage(msg.trim_end().to_owned()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

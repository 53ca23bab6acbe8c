use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use flameball_cli::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.run() {
        Ok(out) => {
            match serde_json::to_string_pretty(&out.summary) {
                // a closed pipe on stdout is not an error worth reporting
                Ok(s) => {
                    let _ = writeln!(std::io::stdout(), "{s}");
                }
                Err(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(out.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

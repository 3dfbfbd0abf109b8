use std::io;
use std::process::ExitCode;

use backhaul::cli::{parse_args, run};

fn main() -> ExitCode {
    let cmd = match parse_args(std::env::args_os().skip(1)) {
        Ok(cmd) => cmd,
        Err(e) => e.exit(),
    };
    let (stdout, stderr) = (io::stdout(), io::stderr());
    match run(&cmd, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

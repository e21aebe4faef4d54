use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut err = stderr.lock();
    let code = ghz_esr::cli::run_with(std::env::args_os(), &mut out, &mut err);
    if out.flush().is_err() {
        return ExitCode::from(ghz_esr::cli::EXIT_IO as u8);
    }
    ExitCode::from(code as u8)
}

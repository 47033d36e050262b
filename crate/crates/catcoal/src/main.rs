use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(catcoal::cli::run_from(std::env::args()) as u8)
}

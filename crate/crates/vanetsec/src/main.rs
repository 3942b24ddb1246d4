use std::process::ExitCode;

fn main() -> ExitCode {
    vanetsec::cli::run()
}

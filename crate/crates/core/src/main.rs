use std::process::ExitCode;

fn main() -> ExitCode {
    otto_spin::cli::main_with_args(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(beamlp_cli::run_with_args(std::env::args_os()))
}

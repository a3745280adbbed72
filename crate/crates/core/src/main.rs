use std::process::ExitCode;

fn main() -> ExitCode {
    subdiv::cli::run()
}

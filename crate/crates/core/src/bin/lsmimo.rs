use std::process::ExitCode;

fn main() -> ExitCode {
    lsmimo::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    enaqt::cli::main()
}

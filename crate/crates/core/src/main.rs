fn main() -> std::process::ExitCode {
    fjeucs::cli::main_with(std::env::args_os())
}

fn main() -> std::process::ExitCode {
    pickup_core::cli::main_with_args(std::env::args_os())
}

fn main() -> std::process::ExitCode {
    gpikit::cli::main_with_args(std::env::args_os())
}

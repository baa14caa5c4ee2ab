fn main() -> std::process::ExitCode {
    qai::cli::run(std::env::args_os())
}

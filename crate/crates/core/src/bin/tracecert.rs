fn main() -> std::process::ExitCode {
    tracecert::cli::main()
}

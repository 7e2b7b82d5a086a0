fn main() -> std::process::ExitCode {
    score_expansion::cli::main()
}

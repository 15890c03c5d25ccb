fn main() -> std::process::ExitCode {
    hybrid_codebook::cli::main()
}

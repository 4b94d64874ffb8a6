fn main() {
    std::process::exit(fsr_cli::cli::run());
}

fn main() {
    std::process::exit(acoherence::cli::run());
}

fn main() {
    std::process::exit(fhp::cli::run_from_env());
}

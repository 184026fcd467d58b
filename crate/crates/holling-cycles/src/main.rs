fn main() {
    std::process::exit(holling_cycles::cli::run_from_env());
}

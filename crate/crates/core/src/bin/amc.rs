fn main() {
    std::process::exit(amc_core::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(asthma_risk::cli::main_with_args(std::env::args_os()));
}

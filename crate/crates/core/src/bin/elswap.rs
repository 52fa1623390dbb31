fn main() {
    std::process::exit(elswap::cli::main_with_args(std::env::args_os()));
}

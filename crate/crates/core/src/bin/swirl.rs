fn main() {
    std::process::exit(swirl::cli::main_with_args(std::env::args_os()));
}

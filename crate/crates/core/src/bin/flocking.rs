fn main() {
    std::process::exit(flocking::cli::main_with_args(std::env::args_os()));
}

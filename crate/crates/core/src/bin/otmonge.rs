fn main() {
    std::process::exit(otmonge::cli::main_with_args(std::env::args_os()));
}

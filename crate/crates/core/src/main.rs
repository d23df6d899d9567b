fn main() {
    std::process::exit(quadpencil::cli::main_with_args(std::env::args_os()));
}

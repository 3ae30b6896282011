fn main() {
    std::process::exit(nightcast::cli::main_with_args(std::env::args_os()));
}

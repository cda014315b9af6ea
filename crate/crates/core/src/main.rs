fn main() {
    std::process::exit(zss::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(lohe_sync::cli::main_with_args(std::env::args_os()));
}

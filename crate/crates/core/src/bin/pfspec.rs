fn main() {
    std::process::exit(pfspec::cli::main_with_args(std::env::args_os()));
}

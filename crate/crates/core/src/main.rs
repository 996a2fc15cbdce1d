fn main() {
    std::process::exit(pliouville::cli::main_with_args(std::env::args_os()));
}

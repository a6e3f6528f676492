fn main() {
    std::process::exit(magres::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(sleepy::cli::main_with_args(std::env::args_os()));
}

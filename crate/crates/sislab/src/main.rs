fn main() {
    std::process::exit(sislab::cli::main_with_args(std::env::args_os()));
}

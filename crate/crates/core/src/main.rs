fn main() {
    std::process::exit(nvmag::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(kellygrowth::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(triod_lab::cli::main_with(std::env::args_os()));
}

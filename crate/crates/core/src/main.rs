fn main() {
    std::process::exit(tongue_core::cli::run(std::env::args_os()));
}

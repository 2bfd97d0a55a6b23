fn main() {
    std::process::exit(uag::cli::run(std::env::args_os()));
}

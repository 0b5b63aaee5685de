fn main() {
    std::process::exit(atol::cli::run(std::env::args_os()));
}

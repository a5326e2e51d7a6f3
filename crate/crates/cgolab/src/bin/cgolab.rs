fn main() {
    std::process::exit(cgolab::cli::run(std::env::args().collect()));
}

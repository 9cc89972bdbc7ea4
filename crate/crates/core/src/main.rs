fn main() {
    std::process::exit(multifix::cli::run(std::env::args()));
}

fn main() {
    std::process::exit(constel::cli::run());
}

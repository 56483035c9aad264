fn main() {
    std::process::exit(ddd_itsa::cli::run());
}

fn main() {
    std::process::exit(smocklab::cli::run());
}

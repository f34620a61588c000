fn main() {
    std::process::exit(swlab::harness::cli::run());
}

fn main() {
    std::process::exit(fptd::cli::run());
}

fn main() {
    std::process::exit(adder_capacity::cli::run());
}

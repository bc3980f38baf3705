fn main() {
    std::process::exit(cptlab::cli::main_with(std::env::args()));
}

fn main() {
    std::process::exit(springsim::cli::main());
}

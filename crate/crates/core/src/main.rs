fn main() {
    std::process::exit(branchdecay::cli::main());
}

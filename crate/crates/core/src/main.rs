fn main() {
    std::process::exit(twinlog::cli::main());
}

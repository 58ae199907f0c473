fn main() {
    std::process::exit(iocompose::cli::main());
}

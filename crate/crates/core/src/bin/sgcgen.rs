fn main() {
    std::process::exit(sgcgen::cli::main());
}

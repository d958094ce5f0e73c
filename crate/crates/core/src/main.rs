fn main() {
    std::process::exit(dcnn::cli::main());
}

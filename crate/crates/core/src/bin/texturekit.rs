fn main() {
    std::process::exit(texturekit::cli::main());
}

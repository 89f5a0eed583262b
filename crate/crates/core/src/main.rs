fn main() {
    std::process::exit(multipcl::cli::main());
}

fn main() {
    std::process::exit(hypenergy::cli::main());
}

fn main() {
    std::process::exit(stuffed_maps::cli::main());
}

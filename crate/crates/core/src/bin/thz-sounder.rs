fn main() {
    std::process::exit(thz_channel::cli::main());
}

fn main() {
    std::process::exit(tenslet::cli::main_entry());
}

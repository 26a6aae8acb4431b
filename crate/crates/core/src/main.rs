fn main() {
    std::process::exit(cmtomo::cli::main_entry());
}

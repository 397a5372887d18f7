fn main() {
    std::process::exit(cltk::cli::run());
}

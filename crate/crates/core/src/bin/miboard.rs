fn main() {
    std::process::exit(miboard::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(binsure::cli::run(std::env::args_os()));
}

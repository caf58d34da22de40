fn main() {
    std::process::exit(nahm::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(catlab::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(erglab::cli::run(std::env::args_os()));
}

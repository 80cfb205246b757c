fn main() {
    std::process::exit(invmo::cli::run(std::env::args_os()));
}

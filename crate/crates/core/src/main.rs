fn main() {
    std::process::exit(heavyband::cli::run_cli(std::env::args_os()));
}

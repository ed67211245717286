fn main() {
    std::process::exit(risqkd_cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(ringlink_cli::run_cli(std::env::args_os()));
}

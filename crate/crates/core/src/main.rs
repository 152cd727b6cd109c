fn main() {
    std::process::exit(stsb::cli::run_cli(std::env::args()));
}

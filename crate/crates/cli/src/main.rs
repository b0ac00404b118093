fn main() {
    std::process::exit(hyreach_cli::run_main(std::env::args()));
}

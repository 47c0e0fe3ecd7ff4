fn main() {
    std::process::exit(fraclap::harness::run_cli(std::env::args_os()));
}

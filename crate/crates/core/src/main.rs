fn main() {
    std::process::exit(phasefield::cli::run_cli(std::env::args_os()));
}

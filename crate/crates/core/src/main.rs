fn main() {
    std::process::exit(freebound::harness::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(kasba::cli::run(std::env::args_os()));
}

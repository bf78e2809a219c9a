fn main() {
    std::process::exit(pullin::cli::run(std::env::args_os()));
}

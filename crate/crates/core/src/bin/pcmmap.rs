fn main() {
    std::process::exit(pcmmap::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(copydraw::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(cwrm::cli::run(std::env::args_os()));
}

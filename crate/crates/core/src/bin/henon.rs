fn main() {
    std::process::exit(henon::cli::run(std::env::args_os()));
}

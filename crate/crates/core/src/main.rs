fn main() {
    std::process::exit(paramq::cli::run(std::env::args_os()));
}

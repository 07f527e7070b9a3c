fn main() {
    std::process::exit(odecond::cli::run(std::env::args_os()));
}

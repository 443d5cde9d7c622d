fn main() {
    std::process::exit(specid::cli::run(std::env::args_os()));
}

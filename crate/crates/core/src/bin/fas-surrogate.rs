fn main() {
    std::process::exit(fas_surrogate::cli::run(std::env::args_os()));
}

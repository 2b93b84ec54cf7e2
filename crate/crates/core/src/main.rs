fn main() {
    std::process::exit(rating_forge::cli::run(std::env::args_os()));
}

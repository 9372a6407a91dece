fn main() {
    std::process::exit(tiam::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(idphase::cli::run(std::env::args_os()));
}

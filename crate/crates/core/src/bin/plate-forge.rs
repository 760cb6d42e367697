fn main() {
    std::process::exit(plate_forge::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(covert_mac::cli::run(std::env::args_os()));
}

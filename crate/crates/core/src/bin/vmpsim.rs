fn main() {
    std::process::exit(vmplace::cli::run(std::env::args_os()));
}

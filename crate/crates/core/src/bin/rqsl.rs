fn main() {
    std::process::exit(robust_qsl::cli::run(std::env::args_os()));
}

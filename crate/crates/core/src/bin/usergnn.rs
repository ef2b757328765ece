fn main() {
    std::process::exit(usergnn_core::cli::run(std::env::args_os()));
}

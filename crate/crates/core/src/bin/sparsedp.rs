fn main() {
    std::process::exit(sparsedp::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(rankdens::cli::run_cli(std::env::args_os()));
}

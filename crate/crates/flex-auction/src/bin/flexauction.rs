fn main() {
    std::process::exit(flex_auction::cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(selmer_cli::run_with_args(std::env::args_os()));
}

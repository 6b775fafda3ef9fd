fn main() {
    std::process::exit(stable_mce::cli::cli_main(std::env::args_os()));
}

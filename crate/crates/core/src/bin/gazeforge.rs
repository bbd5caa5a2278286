fn main() {
    std::process::exit(gazeforge::cli::run(std::env::args_os()));
}

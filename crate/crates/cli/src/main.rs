fn main() {
    std::process::exit(varexp_cli::run(std::env::args_os()));
}

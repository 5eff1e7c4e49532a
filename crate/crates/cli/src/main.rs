fn main() {
    std::process::exit(cgraph_cli::run(std::env::args_os()));
}

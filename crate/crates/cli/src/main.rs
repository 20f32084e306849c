fn main() {
    std::process::exit(sphereonb_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(longmem_cli::run_from(std::env::args_os()));
}

fn main() {
    std::process::exit(sasdp_cli::run(std::env::args_os()));
}

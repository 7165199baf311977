fn main() {
    std::process::exit(tunnelbound_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(qpu_twin_cli::run(std::env::args_os()));
}

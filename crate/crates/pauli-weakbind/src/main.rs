fn main() {
    std::process::exit(pauli_weakbind::cli::run(std::env::args_os()));
}

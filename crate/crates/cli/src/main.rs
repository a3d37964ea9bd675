fn main() {
    std::process::exit(pauli_cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(psi_lab::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(eitmem::cli::main_with_args(std::env::args_os()));
}

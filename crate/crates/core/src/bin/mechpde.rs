fn main() {
    std::process::exit(mechpde::cli::main_with_args(std::env::args_os()));
}

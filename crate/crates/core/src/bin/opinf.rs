fn main() {
    std::process::exit(opinf_core::cli::main_with_args(std::env::args_os()));
}

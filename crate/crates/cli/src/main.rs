fn main() {
    std::process::exit(ptd_cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(optctl_cli::main_with_args(std::env::args_os()));
}

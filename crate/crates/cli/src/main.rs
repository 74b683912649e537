fn main() {
    std::process::exit(tmsv_cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(spinscale::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(csergo::cli::main_with_args(std::env::args_os()));
}

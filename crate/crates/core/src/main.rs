fn main() {
    ncwishart::cli::init_logging();
    std::process::exit(ncwishart::cli::main_with_args(std::env::args_os()));
}

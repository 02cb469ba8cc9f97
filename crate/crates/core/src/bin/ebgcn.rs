fn main() {
    std::process::exit(ebgcn::cli::main_with_args(std::env::args_os()));
}

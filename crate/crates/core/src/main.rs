fn main() {
    std::process::exit(helispin::cli::main_with_args(std::env::args_os()));
}

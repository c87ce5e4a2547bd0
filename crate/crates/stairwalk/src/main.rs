fn main() {
    std::process::exit(stairwalk::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(ecodrive::cli::main_with_args(std::env::args_os()));
}

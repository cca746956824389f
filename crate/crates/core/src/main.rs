fn main() {
    std::process::exit(csfstage::cli::main_with_args(std::env::args_os()));
}

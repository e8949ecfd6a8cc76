fn main() {
    std::process::exit(qsv::cli::main_with_args(std::env::args_os()));
}

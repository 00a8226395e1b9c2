fn main() {
    std::process::exit(noperr::cli::main_with(std::env::args_os()));
}

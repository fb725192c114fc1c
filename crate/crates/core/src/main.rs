fn main() {
    std::process::exit(meti::cli::dispatch(std::env::args_os()));
}

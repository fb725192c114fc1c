fn main() {
    std::process::exit(meti::fixtures::sort_main());
}

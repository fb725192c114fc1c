fn main() {
    std::process::exit(meti::fixtures::synthetic_main());
}

fn main() {
    std::process::exit(branchlab::main_with(std::env::args_os()));
}

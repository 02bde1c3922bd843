fn main() {
    std::process::exit(subset_ldp::cli::main());
}

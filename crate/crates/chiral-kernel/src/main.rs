fn main() {
    std::process::exit(chiral_kernel::cli::run(std::env::args().skip(1)));
}

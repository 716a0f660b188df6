fn main() {
    std::process::exit(doptune::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(qcsim::cli::main(std::env::args_os()));
}

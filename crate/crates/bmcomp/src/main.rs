fn main() {
    std::process::exit(bmcomp::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(surfsplat::cli::run(std::env::args_os()));
}

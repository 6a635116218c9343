fn main() {
    std::process::exit(keyed_deform::cli::run(std::env::args_os()));
}

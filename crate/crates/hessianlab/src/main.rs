fn main() {
    std::process::exit(hessianlab::cli::run(std::env::args_os()));
}

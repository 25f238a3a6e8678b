fn main() {
    let code = sepness::cli::run(std::env::args_os().collect());
    std::process::exit(code);
}

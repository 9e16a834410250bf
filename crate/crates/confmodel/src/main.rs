fn main() {
    let code = confmodel::cli::run_with_args(std::env::args().collect());
    std::process::exit(code);
}

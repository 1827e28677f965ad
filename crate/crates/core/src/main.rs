fn main() {
    let code = dercoopt::cli::main_with(std::env::args_os(), std::env::vars().collect());
    std::process::exit(code);
}

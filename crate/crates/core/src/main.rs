fn main() {
    let code = gec_lab::cli::dispatch(std::env::args_os());
    std::process::exit(code);
}

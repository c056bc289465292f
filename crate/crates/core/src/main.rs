fn main() {
    let code = semigroup_lab::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}

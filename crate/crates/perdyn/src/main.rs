fn main() {
    let env_out = std::env::var("PERDYN_OUT").ok();
    let code = perdyn::cli::run(std::env::args_os(), env_out, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}

fn main() {
    let quiet = std::env::args().any(|a| a == "-q" || a == "--quiet");
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "warn" } else { "info" }))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    let code = idiom_forge::cli::main_with_args(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr());
    std::process::exit(code);
}

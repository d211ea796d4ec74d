use clap::Parser;
use ideograph::cli::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = cli.run(&mut stdout.lock()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

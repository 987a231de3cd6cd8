use clap::Parser;
use sobench_cli::cli::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(err) = sobench_cli::run(cli, &mut stdout.lock()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

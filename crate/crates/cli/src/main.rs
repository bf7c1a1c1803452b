use clap::Parser;
use hstc_cli::config::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = hstc_cli::run(cli.command) {
        let msg = e.to_string().replace('\n', " ");
        eprintln!("hstc: error: {msg}");
        std::process::exit(e.exit_code());
    }
}

use clap::Parser;

use dfm::app::{run, Cli};

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    match run(&cli.command) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {} failed: {e}", cli.command.name());
            std::process::exit(e.exit_code());
        }
    }
}

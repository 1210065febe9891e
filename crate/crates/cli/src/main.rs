use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = rtk_cli::args::Cli::parse();
    match rtk_cli::run(&cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rtk: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

use clap::Parser;
use heis_cli::{emit, run, thread_override, Cli, CliError};

fn main() {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("heis: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = thread_override()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let output = run(cli)?;
    emit(&cli.global, &output)
}

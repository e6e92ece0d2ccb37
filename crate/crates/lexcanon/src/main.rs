use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use lexcanon::cli::{run, RunConfig, EXIT_USAGE};

fn main() -> ExitCode {
    let config = RunConfig::parse();

    let run_to = |out: &mut dyn Write| -> Result<i32, lexcanon::cli::CliError> {
        let code = run(&config, out)?;
        out.flush()?;
        Ok(code)
    };

    let result = match &config.output {
        Some(path) => match File::create(path) {
            Ok(file) => run_to(&mut BufWriter::new(file)),
            Err(source) => Err(lexcanon::cli::CliError::Io {
                path: path.clone(),
                source,
            }),
        },
        None => run_to(&mut BufWriter::new(io::stdout().lock())),
    };

    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Malformed flags are validation errors.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(mut f) => {
            if f.code == 2 && f.diagnostics.is_none() {
                let path = cli.common.output_dir.join("diagnostics.txt");
                if std::fs::write(&path, format!("{}\n", f.message)).is_ok() {
                    f.diagnostics = Some(path);
                }
            }
            eprintln!("error: {}", f.message);
            if let Some(p) = &f.diagnostics {
                eprintln!("diagnostics: {}", p.display());
            }
            ExitCode::from(f.code)
        }
    }
}

use std::process::ExitCode;

use bswg_cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            for b in &manifest.bound_states {
                println!(
                    "{:<10} {:<2} E = {:+.12}  residue = {:.6}",
                    b.kind.label(),
                    b.sector,
                    b.energy,
                    b.residue
                );
            }
            println!(
                "{}: wrote {} files to {} in {:.2} s",
                manifest.command.name(),
                manifest.outputs.len() + 1,
                cli.global.out.display(),
                manifest.wall_time_s
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bswg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

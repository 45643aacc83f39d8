use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use superlase_core::commands::{exit_code_for, run_command, Command, EXIT_USAGE};
use superlase_core::config::parse_config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Steady,
    Sweep,
    Spectrum,
    Linewidth,
    Pulling,
    Tlm,
    Figures,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Steady => Command::Steady,
            Cmd::Sweep => Command::Sweep,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Linewidth => Command::Linewidth,
            Cmd::Pulling => Command::Pulling,
            Cmd::Tlm => Command::Tlm,
            Cmd::Figures => Command::Figures,
        }
    }
}

/// Steady states, linewidths and spectra of a Raman-assisted superradiant laser.
#[derive(Debug, Parser)]
#[command(name = "superlase", version)]
struct Args {
    command: Cmd,
    /// Sectioned key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides [output] path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE as u8);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool set once");
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from(&cfg.output.path));
    match run_command(args.command.into(), &cfg, &out) {
        Ok(o) => {
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            println!("{}", o.message);
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}

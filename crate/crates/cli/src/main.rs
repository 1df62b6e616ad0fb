use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hetero_cli::config::{help_text, parse_entries, Entries, RunConfig};
use hetero_cli::run::{run, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(
    name = "hetero",
    version,
    about = "Minimal heteroclinics and heteroclinic double layers"
)]
#[command(after_help = help_text())]
struct Args {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `mode`
    #[arg(long)]
    mode: Option<String>,
    /// Overrides `out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides `seed`
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Args) -> Result<RunConfig, String> {
    let mut entries = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            parse_entries(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => Entries::default(),
    };
    if let Some(m) = &args.mode {
        entries.set("mode", m);
    }
    if let Some(o) = &args.out {
        entries.set("out", &o.to_string_lossy());
    }
    if let Some(s) = args.seed {
        entries.set("seed", &s.to_string());
    }
    RunConfig::from_entries(entries).map_err(|e| e.to_string())
}

#[cfg(feature = "parallel")]
fn set_jobs(jobs: Option<usize>) -> Result<(), String> {
    match jobs {
        Some(0) => Err("--jobs must be positive".into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string()),
        None => Ok(()),
    }
}

#[cfg(not(feature = "parallel"))]
fn set_jobs(jobs: Option<usize>) -> Result<(), String> {
    match jobs {
        Some(0) => Err("--jobs must be positive".into()),
        Some(n) if n > 1 => {
            eprintln!("warning: built without the parallel feature, --jobs {n} runs on one thread");
            Ok(())
        }
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match set_jobs(args.jobs).and_then(|_| load(&args)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let status = run(&cfg);
    if status.code == 0 {
        println!("{}", status.message);
    } else {
        eprintln!("exit {}: {}", status.code, status.message);
    }
    ExitCode::from(status.code as u8)
}

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use sha2::{Digest, Sha256};

use commands::{Artifacts, Command, Failure};
use config::RawConfig;

/// Run two-phase torsion experiments from a configuration file.
#[derive(Parser, Debug)]
#[command(name = "twophase", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Configuration file (sectioned `key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one entry, e.g. `--set mesh.h=0.025`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to `[output] dir`, else `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent solves; 0 keeps everything serial.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    quiet: bool,
}

fn load(cli: &Cli) -> Result<RawConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

fn write_artifacts(dir: &Path, stem: &str, a: &Artifacts, formats: (bool, bool)) -> Result<Vec<PathBuf>, Failure> {
    let io = |e: std::io::Error| Failure::Numerical(format!("cannot write to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut written = Vec::new();
    if let (Some(csv), true) = (&a.csv, formats.0) {
        let p = dir.join(format!("{stem}.csv"));
        fs::write(&p, csv).map_err(io)?;
        written.push(p);
    }
    if let (Some(json), true) = (&a.json, formats.1) {
        let p = dir.join(format!("{stem}.json"));
        let mut text = twophase::report::to_json_pretty(json);
        text.push('\n');
        fs::write(&p, text).map_err(io)?;
        written.push(p);
    }
    Ok(written)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    if cli.threads > 0 {
        twophase::init_parallelism(cli.threads);
    }
    let quiet = cli.quiet;
    let mut report = |line: &str| {
        if !quiet {
            println!("{line}");
        }
    };
    let formats = cfg.output_formats()?;
    let artifacts = commands::execute(cli.command, &cfg, &mut report)?;
    let digest = hex::encode(Sha256::digest(cfg.canonical().as_bytes()));
    let stem = format!("{}-{}", cli.command.name(), &digest[..12]);
    let dir = match &cli.out {
        Some(d) => d.clone(),
        None => PathBuf::from(cfg.output_dir().unwrap_or("out")),
    };
    let written = write_artifacts(&dir, &stem, &artifacts, formats)?;
    if !quiet {
        let names: Vec<_> = written.iter().map(|p| p.display().to_string()).collect();
        println!("{} [{}]", artifacts.summary, names.join(", "));
    }
    artifacts.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

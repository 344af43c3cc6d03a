use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use carleman_dsolve::config::{Command, RunConfig};
use carleman_dsolve::{result_path, run, CliError, Manifest, Paths};
use clap::Parser;

/// Solves linear difference equations with quasianalytic right-hand sides.
#[derive(Parser, Debug)]
#[command(name = "carleman-dsolve", version)]
struct Args {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Result file; the manifest and side files are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let start = Instant::now();

    let cfg = RunConfig::load(&args.config).and_then(|mut c| match c.command {
        Some(cmd) if cmd != args.command => Err(CliError::Config(format!(
            "config is for `{}` but the command is `{}`",
            cmd.name(),
            args.command.name()
        ))),
        _ => {
            c.command = Some(args.command);
            Ok(c)
        }
    })
    .map_err(|e| match e {
        CliError::Config(m) => m,
        other => other.to_string(),
    });
    let paths = Paths::new(result_path(args.command, args.out.as_deref(), cfg.as_ref().ok()));

    let mut artifacts = Vec::new();
    let res = cfg
        .as_ref()
        .map_err(|m| CliError::Config(m.clone()))
        .and_then(|c| run(args.command, c, &paths, &mut artifacts));
    let mut manifest = Manifest::new(args.command, cfg.as_ref().ok());
    match res {
        Ok(summary) => manifest.summary = summary,
        Err(e) => {
            eprintln!("carleman-dsolve: {e}");
            manifest.exit_code = e.exit_code();
            manifest.error = Some(e.to_string());
        }
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.artifacts = artifacts.iter().map(|p| p.display().to_string()).collect();
    let code = manifest.exit_code;
    if let Err(e) = manifest.write(&paths) {
        eprintln!("carleman-dsolve: {e}");
        return ExitCode::from(if code == 0 { 1 } else { code });
    }
    ExitCode::from(code)
}

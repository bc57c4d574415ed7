use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spiral_anchor::rd_sim::Preset;
use spiral_anchor_cli::{exit_code, run, Subcommand};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    /// Level curves of det A, Γ1, Γ2 and the transverse fold candidates.
    Levelset,
    /// Fixed-point branches, catastrophes and wedge angles.
    Continue,
    /// One reaction-diffusion run with tip tracking.
    Simulate,
    /// Warm-started parameter sweep, forward and reverse.
    Sweep,
    /// Perturbed rotating wave of the center-bundle equation.
    Centerbundle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Desk,
    Full,
}

#[derive(Parser, Debug)]
#[command(name = "spiral-anchor", version, about = "Anchoring of spiral waves by localized perturbations")]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cmd = match args.command {
        Cmd::Levelset => Subcommand::Levelset,
        Cmd::Continue => Subcommand::Continue,
        Cmd::Simulate => Subcommand::Simulate,
        Cmd::Sweep => Subcommand::Sweep,
        Cmd::Centerbundle => Subcommand::Centerbundle,
    };
    let preset = match args.preset {
        PresetArg::Desk => Preset::Desk,
        PresetArg::Full => Preset::Full,
    };
    let res = run(cmd, &args.config, &args.out, preset, args.workers);
    match &res {
        Ok(o) => print!("{}", o.summary),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&res) as u8)
}

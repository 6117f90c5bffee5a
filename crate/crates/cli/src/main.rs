use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dce_cli::commands::{self, COLUMNS_HELP};
use dce_cli::config::{keys_help, RawConfig};
use dce_cli::{CliError, CliResult, RunConfig, Table};

#[derive(Parser)]
#[command(name = "dce", version, about = "Particle creation by a vibrating mirror in a cavity in a weak gravitational field")]
#[command(after_long_help = COLUMNS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean particle numbers per mode at the configured time
    Spectrum(Common),
    /// Eigenfrequencies, residuals and normalisations of the modes
    Modes(Common),
    /// Run the invariant suite (`suite` key: core, formulas or all)
    Validate(Common),
    /// Closed forms (and optionally the pipeline/oracle) along one parameter axis
    Sweep(Common),
    /// List configuration keys and defaults
    Keys,
}

#[derive(Args)]
struct Common {
    /// key = value file; '#' starts a comment
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write the CSV here (and the manifest next to it) instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also integrate the exact truncated system
    #[arg(long)]
    oracle: bool,
    /// Rotating-wave approximation
    #[arg(long)]
    rwa: bool,
    #[arg(long, value_parser = ["1", "2"])]
    metric_order: Option<String>,
    #[arg(long, value_parser = ["1", "2"])]
    pert_order: Option<String>,
    #[arg(long)]
    nz_max: Option<u32>,
}

impl Common {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut raw = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                RawConfig::parse(&text, &p.display().to_string())?
            }
            None => RawConfig::default(),
        };
        for (i, s) in self.set.iter().enumerate() {
            raw.set(s, &format!("--set #{}", i + 1))?;
        }
        if self.oracle {
            raw.set("oracle=true", "--oracle")?;
        }
        if self.rwa {
            raw.set("rwa=true", "--rwa")?;
        }
        if let Some(o) = &self.metric_order {
            raw.set(&format!("metric_order={o}"), "--metric-order")?;
        }
        if let Some(o) = &self.pert_order {
            raw.set(&format!("pert_order={o}"), "--pert-order")?;
        }
        if let Some(n) = self.nz_max {
            raw.set(&format!("nz_max={n}"), "--nz-max")?;
        }
        RunConfig::resolve(&raw)
    }

    fn emit(&self, cfg: &RunConfig, table: &Table) -> CliResult<()> {
        match &self.out {
            Some(p) => {
                std::fs::write(p, table.render())?;
                let mut m = p.clone().into_os_string();
                m.push(".manifest");
                std::fs::write(PathBuf::from(m), cfg.manifest())?;
            }
            None => print!("{}", table.render()),
        }
        Ok(())
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let (common, which) = match &cli.command {
        Command::Keys => {
            print!("{}", keys_help());
            return Ok(());
        }
        Command::Spectrum(c) => (c, "spectrum"),
        Command::Modes(c) => (c, "modes"),
        Command::Validate(c) => (c, "validate"),
        Command::Sweep(c) => (c, "sweep"),
    };
    let cfg = common.resolve()?;
    log::info!("config {}", cfg.hash());
    match which {
        "spectrum" => common.emit(&cfg, &commands::spectrum(&cfg)?),
        "modes" => common.emit(&cfg, &commands::modes(&cfg)?),
        "sweep" => common.emit(&cfg, &commands::sweep(&cfg)?),
        _ => {
            let (table, failures) = commands::validate(&cfg)?;
            common.emit(&cfg, &table)?;
            if failures > 0 {
                return Err(CliError::Validation(format!("{failures} check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dce: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

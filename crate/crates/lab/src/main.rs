use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use iss_lab::config::ScenarioConfig;
use iss_lab::criteria::{reproduce_all, write_reproduction, Tolerances};
use iss_lab::scenarios::{run, scan};
use iss_lab::CliError;

/// Simulates parabolic boundary control systems and probes their
/// input-to-state stability.
#[derive(Parser)]
#[command(name = "iss-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and check its certificate.
    Run { config: PathBuf },
    /// Run the gain scan of a linear scenario.
    Scan { config: PathBuf },
    /// Run every acceptance experiment and print one row per criterion.
    ReproduceAll {
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (defaults to `out/reproduce`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

/// `ISS_LAB_OUT`, then the config's `output`, then `out/<scenario>`.
fn output_dir(cfg: &ScenarioConfig) -> PathBuf {
    if let Some(dir) = std::env::var_os("ISS_LAB_OUT") {
        return PathBuf::from(dir);
    }
    cfg.output.clone().unwrap_or_else(|| Path::new("out").join(cfg.scenario.name()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            println!("{}: ok ({}, N = {})", config.display(), cfg.scenario, cfg.modes());
        }
        Command::Run { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let out = output_dir(&cfg);
            let summary = run(&cfg, &out)?;
            println!("{}: final |x| = {:.6e}", cfg.scenario, summary.final_norm);
            if let Some(c) = &summary.certificate {
                println!(
                    "certificate C1 = {}, ω = {:.6}, C2 = {:.6}, q = {}: {} (max residual {:.3e})",
                    c.certificate.c1,
                    c.certificate.omega,
                    c.certificate.c2,
                    c.certificate.q,
                    if c.holds { "holds" } else { "fails" },
                    c.report.max_residual
                );
            }
            println!("wrote {} files to {}", summary.files.len() + 1, out.display());
        }
        Command::Scan { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let out = output_dir(&cfg);
            let result = scan(&cfg, &out)?;
            for s in &result.summary {
                println!("q = {:<6} ratio {:>10.4}  {}", s.q, s.ratio, s.verdict);
            }
            println!("wrote scan to {}", out.display());
        }
        Command::ReproduceAll { jobs, out } => {
            if let Some(j) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(j.max(1))
                    .build_global()
                    .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
            }
            let out = std::env::var_os("ISS_LAB_OUT")
                .map(PathBuf::from)
                .or(out)
                .unwrap_or_else(|| Path::new("out").join("reproduce"));
            let rep = reproduce_all(&Tolerances::default());
            for o in &rep.outcomes {
                println!("{}", o.line());
            }
            write_reproduction(&rep, &out)?;
            println!("total {:.1} s; artifacts in {}", rep.seconds, out.display());
            let failed = rep.failures();
            if failed > 0 {
                return Err(CliError::CriteriaFailed(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("iss-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

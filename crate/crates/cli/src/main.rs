use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hemac_core::baselines::PolicyId;
use hemac_core::harness::{read_replay, render_frames, replay_verify, run_batch, write_csv, BatchOptions};
use hemac_core::{scenario_registry, ActionMode};
use hemac_server::Server;

#[derive(Parser)]
#[command(name = "hemac", version, about = "Heterogeneous multi-agent benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Heuristic,
    Random,
}

impl From<PolicyArg> for PolicyId {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Heuristic => PolicyId::Heuristic,
            PolicyArg::Random => PolicyId::Random,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Discrete,
    Continuous,
}

impl From<ModeArg> for ActionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Discrete => ActionMode::Discrete,
            ModeArg::Continuous => ActionMode::Continuous,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the scenario registry.
    ListScenarios,
    /// Run a seeded batch of episodes and write per-episode metrics as CSV.
    Run {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "heuristic")]
        policy: PolicyArg,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Episode k uses seed + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Route actions through the padded unified action space.
        #[arg(long)]
        padded: bool,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for one replay file per episode.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Write measured wall time instead of 0 in the CSV.
        #[arg(long)]
        timing: bool,
        /// Action mode of the random policy.
        #[arg(long, value_enum, default_value = "discrete")]
        action_mode: ModeArg,
        /// Run episodes one after another on the calling thread.
        #[arg(long)]
        serial: bool,
    },
    /// Inspect or verify a replay file.
    Replay {
        #[arg(long)]
        file: PathBuf,
        /// Re-execute the episode and compare every reward exactly.
        #[arg(long)]
        verify: bool,
    },
    /// Render SVG frames from a replay file.
    Render {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write a frame after every K-th world step.
        #[arg(long, default_value_t = 100)]
        every: u64,
    },
    /// Serve episodes over TCP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        /// Pad observations and accept unified actions by default.
        #[arg(long)]
        padded: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::ListScenarios => {
            let mut out = io::stdout().lock();
            writeln!(out, "{:<24} {:<13} {:>5} {:>5} {:>5} {:>8} {:>8}", "id", "challenge", "quad", "obs", "prov", "horizon", "targets")?;
            for s in scenario_registry() {
                writeln!(
                    out,
                    "{:<24} {:<13} {:>5} {:>5} {:>5} {:>8} {:>8}",
                    s.id,
                    s.challenge.name(),
                    s.n_quad,
                    s.n_obs,
                    s.n_prov,
                    s.horizon,
                    s.target_count
                )?;
            }
        }
        Command::Run { scenario, policy, episodes, seed, padded, out, record, timing, action_mode, serial } => {
            if episodes == 0 {
                bail!("--episodes must be at least 1");
            }
            let opts = BatchOptions { mode: action_mode.into(), padded, record_dir: record, parallel: !serial };
            let policy = PolicyId::from(policy);
            let report = run_batch(&scenario, policy, episodes, seed, &opts)?;
            match &out {
                Some(path) => {
                    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                    write_csv(&report.rows, f, timing)?;
                }
                None => write_csv(&report.rows, io::stdout().lock(), timing)?,
            }
            let s = report.summary;
            log::info!(
                "{scenario} {policy}: {} episodes, mean {:.3}, std {:.3}, 95% CI [{:.3}, {:.3}]",
                s.episodes,
                s.mean,
                s.std,
                s.ci_low,
                s.ci_high
            );
        }
        Command::Replay { file, verify } => {
            let log = read_replay(&file)?;
            println!(
                "{} seed {}: {} records, {} world steps, team return {}",
                log.header.scenario,
                log.header.seed,
                log.records.len(),
                log.footer.world_steps,
                log.footer.team_return
            );
            if verify {
                if replay_verify(&file)? {
                    println!("verified");
                } else {
                    println!("MISMATCH");
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::Render { file, out, every } => {
            let frames = render_frames(&file, &out, every)?;
            println!("wrote {} frames to {}", frames.len(), out.display());
        }
        Command::Serve { bind, padded } => {
            let server = Server::bind(&bind).with_context(|| format!("binding {bind}"))?.padded(padded);
            log::info!("listening on {}", server.local_addr()?);
            server.run()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

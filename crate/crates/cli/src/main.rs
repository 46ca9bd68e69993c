//! `nrts`: serve, score offline, generate, submit, and inspect traces.
//!
//! Exit status is 0 on success, 1 when the server or the network fails, and
//! 2 when local input does not parse or validate.

mod local;
mod remote;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nrts_core::DistanceConfig;

#[derive(Parser)]
#[command(name = "nrts", version, about = "Neonatal resuscitation trace scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Score one trace against a gold bundle without a server.
    Score(ScoreArgs),
    /// Write a seeded corpus of noisy copies of the gold trace.
    Gen(GenArgs),
    /// POST trace files and print the returned scores.
    Submit(SubmitArgs),
    /// Print the statistics of a session.
    Stats(StatsArgs),
    /// Upload a gold bundle.
    Gold(GoldArgs),
}

#[derive(Args, Clone, Copy)]
struct DistanceArgs {
    /// Weight of the taxonomy term against the duration term.
    #[arg(long, env = "NRTS_ALPHA", default_value_t = DistanceConfig::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, env = "NRTS_INDEL_COST", default_value_t = DistanceConfig::DEFAULT_INDEL_COST)]
    indel_cost: f64,
}

impl DistanceArgs {
    fn config(self) -> Result<DistanceConfig, Failure> {
        DistanceConfig::new(self.alpha, self.indel_cost).map_err(|e| Failure::Local(e.into()))
    }
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "NRTS_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, env = "NRTS_STORE_DIR", default_value = "nrts-data")]
    store_dir: PathBuf,
    /// Gold bundle installed at startup unless it is already active.
    #[arg(long, env = "NRTS_GOLD_DIR")]
    gold_dir: Option<PathBuf>,
    #[command(flatten)]
    distance: DistanceArgs,
    /// Bearer token required for gold uploads.
    #[arg(long, env = "NRTS_ADMIN_TOKEN")]
    admin_token: Option<String>,
    /// Static files served under `/`.
    #[arg(long, env = "NRTS_UI_DIR")]
    ui_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Bundle directory or bundle JSON file.
    gold: PathBuf,
    trace: PathBuf,
    #[command(flatten)]
    distance: DistanceArgs,
    /// Also print the DP cost matrix as a tab-separated table.
    #[arg(long)]
    dump_matrix: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    gold: PathBuf,
    #[arg(long)]
    groups: usize,
    #[arg(long)]
    traces_per_group: usize,
    /// Per-event noise probability.
    #[arg(long)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    session_id: Option<String>,
    /// Comma-separated subset of drop, perturb, swap.
    #[arg(long, value_delimiter = ',', default_value = "drop,perturb,swap")]
    kinds: Vec<local::Kind>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ServerArg {
    #[arg(long, env = "NRTS_SERVER", default_value = "http://127.0.0.1:8080")]
    server: String,
}

#[derive(Args)]
struct SubmitArgs {
    #[command(flatten)]
    server: ServerArg,
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Session for traces that carry none. Defaults to the one the server
    /// mints for the first such trace.
    #[arg(long)]
    session_id: Option<String>,
    /// One response object per line.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    server: ServerArg,
    session_id: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GoldArgs {
    #[command(flatten)]
    server: ServerArg,
    gold: PathBuf,
    #[arg(long, env = "NRTS_ADMIN_TOKEN")]
    admin_token: Option<String>,
}

pub enum Failure {
    Remote(anyhow::Error),
    Local(anyhow::Error),
}

impl Failure {
    pub fn local(e: impl Into<anyhow::Error>) -> Self {
        Self::Local(e.into())
    }

    pub fn remote(e: impl Into<anyhow::Error>) -> Self {
        Self::Remote(e.into())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Serve(a) => remote::serve(
            a.listen,
            a.store_dir,
            a.gold_dir,
            nrts_server::ServerConfig {
                distance: a.distance.config()?,
                admin_token: a.admin_token,
                ui_dir: a.ui_dir,
            },
        ),
        Command::Score(a) => local::score(&a.gold, &a.trace, a.distance.config()?, a.dump_matrix, a.json),
        Command::Gen(a) => local::gen(&a),
        Command::Submit(a) => remote::submit(&a.server.server, &a.traces, a.session_id, a.json),
        Command::Stats(a) => remote::stats(&a.server.server, &a.session_id, a.json),
        Command::Gold(a) => remote::gold(&a.server.server, &a.gold, a.admin_token.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Remote(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Local(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

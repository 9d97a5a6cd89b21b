//! The `miboard` command line: `serve`, `simulate` and `replay`.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bots::{simulate, BotPolicy, SimOptions};
use crate::config::GameConfig;
use crate::content::{PackLibrary, TextPack};
use crate::server::{replay, ServeOptions};

#[derive(Debug, Parser)]
#[command(name = "miboard", version, about = "Reading-strategy board game server, simulator and replayer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the game server.
    Serve {
        /// WebSocket listen address; the endpoint is `/ws`.
        #[arg(long, env = "MIBOARD_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Also accept newline-delimited envelopes over plain TCP.
        #[arg(long)]
        tcp: Option<SocketAddr>,
        /// Directory of `*.json` text packs.
        #[arg(long)]
        packs: Option<PathBuf>,
        /// JSON file of config overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where session logs are written.
        #[arg(long, env = "MIBOARD_LOG_DIR")]
        log_dir: Option<PathBuf>,
    },
    /// Play bot games and report aggregate statistics.
    Simulate {
        #[arg(long, default_value_t = 4)]
        players: usize,
        #[arg(long, default_value_t = 100)]
        games: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated, one per seat or a single one for all seats:
        /// uniform, oracle:P, stubborn, swayed, each optionally +greedy.
        #[arg(long, default_value = "uniform", value_delimiter = ',')]
        policies: Vec<BotPolicy>,
        #[arg(long)]
        packs: Option<PathBuf>,
        /// Pack name within `--packs`; defaults to the first.
        #[arg(long)]
        pack: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path; stdout if omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-game CSV rows.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write every game's log here.
        #[arg(long, env = "MIBOARD_LOG_DIR")]
        log_dir: Option<PathBuf>,
    },
    /// Re-run a session log and print its final digest.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Serve {
            bind,
            tcp,
            packs,
            config,
            log_dir,
        } => serve(bind, tcp, packs, config, log_dir),
        Command::Simulate {
            players,
            games,
            seed,
            policies,
            packs,
            pack,
            config,
            report,
            csv,
            log_dir,
        } => {
            let policies = match policies.as_slice() {
                [one] => vec![*one; players],
                many if many.len() == players => many.to_vec(),
                many => {
                    eprintln!(
                        "error: --policies lists {} seats but --players is {players}",
                        many.len()
                    );
                    return 1;
                }
            };
            run_simulate(&policies, games, seed, packs, pack, config, report, csv, log_dir)
        }
        Command::Replay { log } => run_replay(&log),
    };
    match result {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<GameConfig, String> {
    let Some(path) = path else {
        return Ok(GameConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    GameConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_packs(dir: Option<&Path>) -> Result<PackLibrary, String> {
    let Some(dir) = dir else {
        return Ok(PackLibrary::with_sample());
    };
    let lib = PackLibrary::load_dir(dir).map_err(|e| e.to_string())?;
    if lib.is_empty() {
        return Err(format!("no packs in {}", dir.display()));
    }
    Ok(lib)
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn serve(
    bind: SocketAddr,
    tcp: Option<SocketAddr>,
    packs: Option<PathBuf>,
    config: Option<PathBuf>,
    log_dir: Option<PathBuf>,
) -> Result<(), String> {
    let opts = ServeOptions {
        bind,
        tcp,
        log_dir,
        config: load_config(config.as_deref())?,
        packs: load_packs(packs.as_deref())?,
    };
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let server = crate::server::serve(opts).await.map_err(|e| e.to_string())?;
        println!("listening on ws://{}/ws", server.ws_addr());
        if let Some(addr) = server.tcp_addr() {
            println!("listening on tcp://{addr}");
        }
        let _ = tokio::signal::ctrl_c().await;
        server.shutdown().await;
        Ok(())
    })
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    policies: &[BotPolicy],
    games: usize,
    seed: u64,
    packs: Option<PathBuf>,
    pack: Option<String>,
    config: Option<PathBuf>,
    report: Option<PathBuf>,
    csv: Option<PathBuf>,
    log_dir: Option<PathBuf>,
) -> Result<(), String> {
    let config = load_config(config.as_deref())?;
    let library = load_packs(packs.as_deref())?;
    let text: &TextPack = match &pack {
        Some(name) => library.get(name).ok_or_else(|| format!("unknown pack `{name}`"))?,
        None => library.first().expect("library is not empty").1,
    };
    let opts = SimOptions {
        keep_logs: log_dir.is_some(),
        ..SimOptions::default()
    };
    let outcome =
        simulate(&config, policies, text, games, seed, &opts).map_err(|e| e.to_string())?;
    let json = outcome.report.to_json();
    match report {
        Some(path) => write(&path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = csv {
        write(&path, &outcome.csv())?;
    }
    if let Some(dir) = log_dir {
        std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for (i, log) in outcome.logs.iter().enumerate() {
            write(&dir.join(format!("sim-{i}.mblog")), log)?;
        }
    }
    Ok(())
}

fn run_replay(path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let report = replay(&text).map_err(|e| e.to_string())?;
    let state = &report.state;
    println!("digest {}", report.digest);
    println!("lobby {}", report.header.lobby_id);
    println!("entries {}", report.entries);
    println!("checkpoints {}", report.checkpoints);
    println!("phase {}", serde_json::to_value(state.phase).expect("phase serializes").as_str().unwrap_or_default());
    println!("turns {}", state.turns_completed);
    match &state.winner {
        Some(w) => println!("winner {w}"),
        None => println!("winner -"),
    }
    for p in &state.players {
        println!("player {} {} position={} points={}", p.player_id, p.display_name, p.token_position, p.points);
    }
    Ok(())
}

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use toxmarket_core::optimizer::{build_model, optimize_basket, BasketInstance};
use toxmarket_core::settlement::SettlementReport;
use toxmarket_core::simulator::{manipulation_experiment, run_session, shock_session, SimConfig};
use toxmarket_core::{Cents, MarketId};
use toxmarket_service::clock::{Clock, SystemClock};
use toxmarket_service::http::ingest_event;
use toxmarket_service::{serve, Event, FileJournal, ServiceConfig, ServiceState};

#[derive(Parser)]
#[command(name = "toxmarket", version, about = "Prediction-market exchange for impaired-asset pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Load an asset CSV into the journal; prints accepted ids and rejections.
    Ingest {
        file: PathBuf,
        #[command(flatten)]
        store: Store,
    },
    /// Resolve a market at the announced price and print the settlement report.
    Settle {
        market_id: String,
        #[arg(long)]
        announced_cents: i64,
        #[command(flatten)]
        store: Store,
    },
    /// Suggest asset pairs for joint markets.
    ProposePairs {
        #[arg(long)]
        radius_km: f64,
        #[arg(long, default_value_t = 10)]
        max: usize,
        #[command(flatten)]
        store: Store,
    },
    /// Solve a basket instance file.
    Optimize {
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        time_limit_ms: u64,
        /// Also write the linearised model to this path.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run an agent-based session and print per-round prices plus a summary.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, requires = "new_price")]
        shock_round: Option<u32>,
        /// Post-shock true price in whole euros.
        #[arg(long, requires = "shock_round")]
        new_price: Option<i64>,
        /// Run the paired with/without-manipulator experiment instead.
        #[arg(long, conflicts_with = "shock_round")]
        manipulation: bool,
    },
}

#[derive(clap::Args)]
struct Store {
    /// Service config; its journal path and exchange settings are used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Journal to operate on (overrides the config).
    #[arg(long)]
    journal: Option<PathBuf>,
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Serve { config } => {
            let config = ServiceConfig::load(config.as_deref())?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(config))?;
        }
        Command::Ingest { file, store } => {
            let mut state = open_state(&store)?;
            let input = std::fs::read(&file)?;
            let (event, report) = ingest_event(state.registry(), &input)?;
            if let Some(event) = event {
                state.submit(event, None)?;
            }
            let mut out = io::stdout().lock();
            for id in &report.accepted {
                writeln!(out, "accepted {id}")?;
            }
            for r in &report.rejected {
                writeln!(out, "rejected line {}: {}", r.line, r.reason)?;
            }
        }
        Command::Settle {
            market_id,
            announced_cents,
            store,
        } => {
            let mut state = open_state(&store)?;
            let event = Event::MarketSettled {
                market_id: MarketId::new(market_id),
                announced: Cents(announced_cents),
                now: SystemClock.now(),
            };
            let report: SettlementReport = serde_json::from_value(state.submit(event, None)?)?;
            report.write_csv(io::stdout().lock())?;
        }
        Command::ProposePairs { radius_km, max, store } => {
            let state = open_state(&store)?;
            let mut out = io::stdout().lock();
            writeln!(out, "asset_a,asset_b,distance_km")?;
            for p in state.exchange().propose_pairs(radius_km, max) {
                writeln!(out, "{},{},{:.3}", p.asset_a, p.asset_b, p.distance_km)?;
            }
        }
        Command::Optimize {
            file,
            time_limit_ms,
            model,
        } => {
            let inst = BasketInstance::parse(&std::fs::read_to_string(&file)?)?;
            if let Some(path) = model {
                std::fs::write(path, build_model(&inst)?.to_string())?;
            }
            let sol = optimize_basket(&inst, Duration::from_millis(time_limit_ms))?;
            println!("{}", serde_json::to_string_pretty(&sol)?);
        }
        Command::Simulate {
            config,
            seed,
            shock_round,
            new_price,
            manipulation,
        } => {
            let mut cfg = match config {
                Some(p) => SimConfig::from_toml(&std::fs::read_to_string(p)?)?,
                None => SimConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let out = io::stdout().lock();
            if manipulation {
                manipulation_experiment(&cfg)?.write_summary(out)?;
            } else if let (Some(r), Some(p)) = (shock_round, new_price) {
                shock_session(&cfg, r, Cents::from_euros(p))?.write(out)?;
            } else {
                run_session(&cfg)?.write(out)?;
            }
        }
    }
    Ok(())
}

fn open_state(store: &Store) -> Result<ServiceState, Box<dyn std::error::Error>> {
    let mut config = ServiceConfig::load(store.config.as_deref())?;
    if let Some(j) = &store.journal {
        config.journal_path = j.clone();
    }
    open_journal(&config.journal_path, &config)
}

fn open_journal(path: &Path, config: &ServiceConfig) -> Result<ServiceState, Box<dyn std::error::Error>> {
    let (journal, records) = FileJournal::open(path, config.fsync)?;
    Ok(ServiceState::replay(config.exchange.clone(), &records, Box::new(journal))?)
}

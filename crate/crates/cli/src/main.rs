//! `aiprov` — register, exchange and trace AI assets on a simulated
//! provenance ledger.
//!
//! Exit codes: 0 success, 1 protocol error (machine-readable error name on
//! stderr), 2 usage error.

use aiprov_cli::config::{Config, ConfigError};
use aiprov_cli::report;
use aiprov_cli::scenario::{self, ScenarioError};
use aiprov_core::client::keystore::Keystore;
use aiprov_core::client::{default_algorithm, pack_directory, ActorContext};
use aiprov_core::ledger::persist::{self, ChainLock, PersistError};
use aiprov_core::provenance::{self, ExportFormat};
use aiprov_core::{
    AccountAddress, AccountInfo, AssetId, ClientError, FileStore, Ledger, SharedLedger,
};
use clap::{Parser, Subcommand, ValueEnum};
use rand::RngCore;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "aiprov", version, about = "Provenance ledger for AI assets")]
struct Cli {
    /// Path to the artifact config file.
    #[arg(long, global = true, default_value = "aiprov.json")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Dot => ExportFormat::Dot,
            Format::Json => ExportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Create a config file, an empty chain and the store layout.
    Init {
        /// Base directory for chain, store and keystore paths.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Account management.
    Account {
        #[command(subcommand)]
        command: AccountCommand,
    },
    /// Register a payload file (or directory) as a new asset.
    Register {
        /// Payload file; directories are packaged deterministically.
        #[arg(long)]
        payload: PathBuf,
        /// JSON metadata file with at least name and asset_type.
        #[arg(long)]
        metadata: PathBuf,
        /// Comma-separated parent asset ids.
        #[arg(long, value_delimiter = ',')]
        parents: Vec<String>,
    },
    /// Request access to an asset.
    Request {
        asset_id: String,
        #[arg(long, default_value = default_algorithm())]
        algorithm: String,
    },
    /// Grant a pending access request.
    Grant {
        asset_id: String,
        /// Accessor address (hex) or account name.
        accessor: String,
    },
    /// List requests pending on assets this account maintains.
    Pending,
    /// Download, decrypt and verify an asset this account was granted.
    Fetch {
        asset_id: String,
        /// Write the plaintext here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the ancestry of an asset.
    Trace {
        asset_id: String,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List every asset derived from the given one.
    Usages { asset_id: String },
    /// List accounts holding access grants for an asset.
    Accessors { asset_id: String },
    /// Transfer maintainership.
    Transfer {
        asset_id: String,
        /// New maintainer address (hex) or account name.
        new_maintainer: String,
    },
    /// Publish an additional download URL.
    AddUrl { asset_id: String, url: String },
    /// Export the full provenance graph.
    Export {
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-action gas and USD-cent costs for the current chain.
    GasReport {
        #[arg(long)]
        json: bool,
    },
    /// Scenario tooling.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum AccountCommand {
    /// Create an account and register it on the chain.
    New { name: String },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Replay a bundled scenario on a fresh chain.
    Run { name: String },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad asset id: {0}")]
    BadAssetId(String),
    #[error("unknown account: {0}")]
    UnknownAccountName(String),
    #[error(transparent)]
    Provenance(#[from] aiprov_core::ProvenanceError),
    #[error(transparent)]
    Ledger(#[from] aiprov_core::LedgerError),
}

impl CliError {
    fn name(&self) -> &'static str {
        match self {
            CliError::Client(e) => e.name(),
            CliError::Config(_) => "ConfigError",
            CliError::Persist(PersistError::TamperDetected) => "TamperDetected",
            CliError::Persist(PersistError::Locked(_)) => "ChainLocked",
            CliError::Persist(_) => "ChainError",
            CliError::Scenario(ScenarioError::ChainNotFresh) => "ChainNotFresh",
            CliError::Scenario(ScenarioError::Unknown(_)) => "UnknownScenario",
            CliError::Scenario(_) => "ScenarioError",
            CliError::Io(_) => "IoError",
            CliError::BadAssetId(_) => "BadAssetId",
            CliError::UnknownAccountName(_) => "UnknownAccount",
            CliError::Provenance(aiprov_core::ProvenanceError::UnknownAsset(_)) => "UnknownAsset",
            CliError::Provenance(_) => "InconsistentLogs",
            CliError::Ledger(e) => e.name(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}: {err}", err.name());
            ExitCode::FAILURE
        }
    }
}

fn parse_asset_id(raw: &str) -> Result<AssetId, CliError> {
    AssetId::from_hex(raw).map_err(|_| CliError::BadAssetId(raw.to_string()))
}

fn resolve_account(ledger: &Ledger, raw: &str) -> Result<AccountAddress, CliError> {
    if let Ok(addr) = AccountAddress::from_hex(raw) {
        return Ok(addr);
    }
    ledger
        .account_by_name(raw)
        .map(|info| info.address)
        .ok_or_else(|| CliError::UnknownAccountName(raw.to_string()))
}

fn load_ledger(config: &Config) -> Result<Ledger, CliError> {
    Ok(persist::load_chain(
        &config.chain_path,
        config.effective_schedule(),
    )?)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Actor-facing session: locked chain, store and keystore handles.
struct Session {
    config: Config,
    ledger: SharedLedger,
    actor: ActorContext,
    _lock: ChainLock,
}

impl Session {
    fn open(config: Config) -> Result<Self, CliError> {
        config.validate_paths()?;
        let lock = ChainLock::acquire(&config.chain_path)?;
        let ledger = load_ledger(&config)?;
        let name = config.account.clone().ok_or(ConfigError::NoAccount)?;
        let account = match ledger.account_by_name(&name) {
            Some(info) => info.address,
            None => return Err(CliError::UnknownAccountName(name)),
        };
        let shared = aiprov_core::ledger::shared(ledger);
        let actor = ActorContext::new(
            account,
            shared.clone(),
            FileStore::new(&config.store_root),
            Keystore::open(&config.keystore_path).map_err(ClientError::from)?,
        );
        Ok(Self {
            config,
            ledger: shared,
            actor,
            _lock: lock,
        })
    }

    fn commit(&self) -> Result<(), CliError> {
        let guard = self.ledger.read().expect("ledger lock poisoned");
        persist::save_chain(&guard, &self.config.chain_path)?;
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Init { dir, force } => {
            if cli.config.exists() && !force {
                return Err(ConfigError::AlreadyExists(cli.config.clone()).into());
            }
            let base = match dir {
                Some(d) => d.clone(),
                None => cli
                    .config
                    .parent()
                    .map(Path::to_path_buf)
                    .filter(|p| !p.as_os_str().is_empty())
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            fs::create_dir_all(&base)?;
            let config = Config::with_base_dir(&base);
            fs::create_dir_all(&config.store_root)?;
            let ledger = Ledger::new(config.effective_schedule());
            persist::save_chain(&ledger, &config.chain_path)?;
            config.save(&cli.config)?;
            println!("initialized chain at {}", config.chain_path.display());
            Ok(())
        }
        Command::Account {
            command: AccountCommand::New { name },
        } => {
            let mut config = Config::load(&cli.config)?;
            let _lock = ChainLock::acquire(&config.chain_path)?;
            let mut ledger = load_ledger(&config)?;
            let mut public_key = vec![0u8; 32];
            rand::rngs::OsRng.fill_bytes(&mut public_key);
            let info = AccountInfo::new(name.clone(), public_key);
            let address = info.address;
            ledger.register_account(info)?;
            persist::save_chain(&ledger, &config.chain_path)?;
            if config.account.is_none() {
                config.account = Some(name.clone());
                config.save(&cli.config)?;
            }
            println!("{address}");
            Ok(())
        }
        Command::Register {
            payload,
            metadata,
            parents,
        } => {
            let mut session = Session::open(Config::load(&cli.config)?)?;
            let payload_bytes = if payload.is_dir() {
                pack_directory(payload)?
            } else {
                fs::read(payload)?
            };
            let metadata_text = fs::read_to_string(metadata)?;
            let parent_ids = parents
                .iter()
                .filter(|p| !p.is_empty())
                .map(|p| parse_asset_id(p))
                .collect::<Result<Vec<_>, _>>()?;
            let id = session
                .actor
                .register_asset(&payload_bytes, &metadata_text, &parent_ids)?;
            session.commit()?;
            println!("{id}");
            Ok(())
        }
        Command::Request {
            asset_id,
            algorithm,
        } => {
            let mut session = Session::open(Config::load(&cli.config)?)?;
            let id = parse_asset_id(asset_id)?;
            let pending = session.actor.request_asset(&id, algorithm)?;
            session.commit()?;
            println!(
                "requested {} at block {} with {}",
                id, pending.request_block, pending.encryption_algorithm
            );
            Ok(())
        }
        Command::Grant { asset_id, accessor } => {
            let mut session = Session::open(Config::load(&cli.config)?)?;
            let id = parse_asset_id(asset_id)?;
            let accessor = {
                let guard = session.ledger.read().expect("ledger lock poisoned");
                resolve_account(&guard, accessor)?
            };
            let receipt = session.actor.grant(&id, &accessor)?;
            session.commit()?;
            println!(
                "granted {} to {} at block {}",
                id, accessor, receipt.block_number
            );
            Ok(())
        }
        Command::Pending => {
            let session = Session::open(Config::load(&cli.config)?)?;
            for request in session.actor.list_pending_requests() {
                println!(
                    "{} {} {} block {}",
                    request.asset_id,
                    request.accessor,
                    request.encryption_algorithm,
                    request.request_block
                );
            }
            Ok(())
        }
        Command::Fetch { asset_id, out } => {
            let mut session = Session::open(Config::load(&cli.config)?)?;
            let id = parse_asset_id(asset_id)?;
            let plaintext = session.actor.fetch_asset(&id)?;
            match out {
                Some(path) => fs::write(path, &plaintext)?,
                None => std::io::stdout().write_all(&plaintext)?,
            }
            Ok(())
        }
        Command::Trace {
            asset_id,
            format,
            out,
        } => {
            let config = Config::load(&cli.config)?;
            let ledger = load_ledger(&config)?;
            let id = parse_asset_id(asset_id)?;
            let graph = provenance::build_ancestry(&ledger, &id)?;
            write_or_print(out.as_deref(), &provenance::export(&graph, (*format).into()))
        }
        Command::Usages { asset_id } => {
            let config = Config::load(&cli.config)?;
            let ledger = load_ledger(&config)?;
            let id = parse_asset_id(asset_id)?;
            let graph = provenance::build_full(&ledger)?;
            for descendant in provenance::descendants(&ledger, &id)? {
                let name = graph
                    .nodes
                    .get(&descendant)
                    .map(|n| n.name())
                    .unwrap_or_default();
                println!("{descendant} {name}");
            }
            Ok(())
        }
        Command::Accessors { asset_id } => {
            let config = Config::load(&cli.config)?;
            let ledger = load_ledger(&config)?;
            let id = parse_asset_id(asset_id)?;
            for (accessor, block) in provenance::accessors(&ledger, &id)? {
                println!("{accessor} block {block}");
            }
            Ok(())
        }
        Command::Transfer {
            asset_id,
            new_maintainer,
        } => {
            let mut session = Session::open(Config::load(&cli.config)?)?;
            let id = parse_asset_id(asset_id)?;
            let to = {
                let guard = session.ledger.read().expect("ledger lock poisoned");
                resolve_account(&guard, new_maintainer)?
            };
            session.actor.transfer(&id, &to)?;
            session.commit()?;
            println!("transferred {id} to {to}");
            Ok(())
        }
        Command::AddUrl { asset_id, url } => {
            let mut session = Session::open(Config::load(&cli.config)?)?;
            let id = parse_asset_id(asset_id)?;
            session.actor.add_url(&id, url)?;
            session.commit()?;
            println!("added url to {id}");
            Ok(())
        }
        Command::Export { format, out } => {
            let config = Config::load(&cli.config)?;
            let ledger = load_ledger(&config)?;
            let graph = provenance::build_full(&ledger)?;
            write_or_print(out.as_deref(), &provenance::export(&graph, (*format).into()))
        }
        Command::GasReport { json } => {
            let config = Config::load(&cli.config)?;
            let ledger = load_ledger(&config)?;
            let actions = scenario::load_actions(&config);
            let report = report::build(&ledger, actions.as_deref());
            if *json {
                print!("{}", report.render_json());
            } else {
                print!("{}", report.render_text());
            }
            Ok(())
        }
        Command::Scenario {
            command: ScenarioCommand::Run { name },
        } => {
            let config = Config::load(&cli.config)?;
            let _lock = ChainLock::acquire(&config.chain_path)?;
            let outcome = scenario::run_named(name, &config)?;
            println!(
                "scenario {name}: {} actions, {} assets, archive round-trip {} bytes",
                outcome.actions.len(),
                outcome.assets.len(),
                outcome.fetched_archive_bytes
            );
            println!("run `gas-report` for the cost table");
            Ok(())
        }
    }
}

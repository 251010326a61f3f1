//! Artifact configuration: file paths, the active account, and the gas
//! schedule with all calibration constants spelled out. Unknown keys are
//! rejected; selected fields can be overridden through `AIPROV_*`
//! environment variables.

use aiprov_core::GasSchedule;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable prefix for overrides.
pub const ENV_PREFIX: &str = "AIPROV_";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config already exists at {0} (use --force to overwrite)")]
    AlreadyExists(PathBuf),
    #[error("no active account; run `account new <name>` first")]
    NoAccount,
    #[error("config path problem: {0}")]
    BadPath(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub chain_path: PathBuf,
    pub store_root: PathBuf,
    pub keystore_path: PathBuf,
    /// Name of the account this client acts as.
    pub account: Option<String>,
    /// Cost model; partial objects fall back to defaults per field.
    #[serde(default)]
    pub gas_schedule: GasSchedule,
    /// Convenience overrides applied on top of `gas_schedule`.
    #[serde(default)]
    pub gas_price_eth: Option<f64>,
    #[serde(default)]
    pub eth_usd: Option<f64>,
}

impl Config {
    /// Default layout rooted at `dir`.
    pub fn with_base_dir(dir: &Path) -> Self {
        Self {
            chain_path: dir.join("chain.jsonl"),
            store_root: dir.join("store"),
            keystore_path: dir.join("keystore.json"),
            account: None,
            gas_schedule: GasSchedule::default(),
            gas_price_eth: None,
            eth_usd: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = fs::read_to_string(path)?;
        let mut config: Config =
            serde_json::from_str(&raw).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.apply_env();
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let mut raw =
            serde_json::to_string_pretty(self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        raw.push('\n');
        fs::write(path, raw)?;
        Ok(())
    }

    /// Environment overrides: `AIPROV_CHAIN_PATH`, `AIPROV_STORE_ROOT`,
    /// `AIPROV_KEYSTORE_PATH`, `AIPROV_ACCOUNT`, `AIPROV_GAS_PRICE_ETH`,
    /// `AIPROV_ETH_USD`.
    fn apply_env(&mut self) {
        let var = |name: &str| std::env::var(format!("{ENV_PREFIX}{name}")).ok();
        if let Some(v) = var("CHAIN_PATH") {
            self.chain_path = PathBuf::from(v);
        }
        if let Some(v) = var("STORE_ROOT") {
            self.store_root = PathBuf::from(v);
        }
        if let Some(v) = var("KEYSTORE_PATH") {
            self.keystore_path = PathBuf::from(v);
        }
        if let Some(v) = var("ACCOUNT") {
            self.account = Some(v);
        }
        if let Some(v) = var("GAS_PRICE_ETH").and_then(|v| v.parse().ok()) {
            self.gas_price_eth = Some(v);
        }
        if let Some(v) = var("ETH_USD").and_then(|v| v.parse().ok()) {
            self.eth_usd = Some(v);
        }
    }

    /// The schedule with price overrides folded in.
    pub fn effective_schedule(&self) -> GasSchedule {
        let mut schedule = self.gas_schedule.clone();
        if let Some(price) = self.gas_price_eth {
            schedule.gas_price_eth = price;
        }
        if let Some(usd) = self.eth_usd {
            schedule.eth_usd = usd;
        }
        schedule
    }

    /// Check that configured locations are usable.
    pub fn validate_paths(&self) -> Result<(), ConfigError> {
        for (label, path) in [
            ("chain_path", &self.chain_path),
            ("keystore_path", &self.keystore_path),
        ] {
            match path.parent() {
                Some(parent) if parent.as_os_str().is_empty() => {}
                Some(parent) if parent.is_dir() => {}
                Some(parent) => {
                    return Err(ConfigError::BadPath(format!(
                        "{label}: parent directory {} does not exist",
                        parent.display()
                    )))
                }
                None => {
                    return Err(ConfigError::BadPath(format!("{label}: not a file path")))
                }
            }
        }
        Ok(())
    }

    /// Path of the scenario action sidecar for this chain.
    pub fn actions_path(&self) -> PathBuf {
        let mut os = self.chain_path.clone().into_os_string();
        os.push(".actions.json");
        PathBuf::from(os)
    }

    /// Directory for scenario actors' keystores.
    pub fn scenario_keys_dir(&self) -> PathBuf {
        self.keystore_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("scenario-keys")
    }
}

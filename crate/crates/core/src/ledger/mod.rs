//! Simulated single-chain permission-less ledger.
//!
//! One transaction per block with deterministic timestamps, so runs are
//! byte-stable. Contract calls execute against a scratch state copy:
//! a revert is recorded in the receipt and leaves no logs and no state
//! change, but still costs gas.

pub mod gas;
pub mod persist;

use crate::contract::abi::{Call, CallShape};
use crate::contract::{self, ContractError, ContractState};
use crate::types::{AccountAddress, BlockHash, Topic};
use crate::AssetId;
use gas::{GasSchedule, UnknownFunction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};

/// Timestamp of the genesis block; block `n` is stamped `GENESIS_TIMESTAMP + n`.
pub const GENESIS_TIMESTAMP: u64 = 1_577_836_800;

/// Address the provenance contract lives at.
pub fn contract_address() -> AccountAddress {
    AccountAddress::from_public_key(b"provenance-contract-v1")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("sender account {0} is not registered on this chain")]
    UnknownAccount(AccountAddress),
    #[error("account {0} already exists")]
    AccountExists(AccountAddress),
    #[error("bad nonce: expected {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("gas limit exceeded: call needs {required}, limit is {limit}")]
    GasLimitExceeded { required: u64, limit: u64 },
    #[error(transparent)]
    UnknownFunction(#[from] UnknownFunction),
}

impl LedgerError {
    pub fn name(&self) -> &'static str {
        match self {
            LedgerError::UnknownAccount(_) => "UnknownAccount",
            LedgerError::AccountExists(_) => "AccountExists",
            LedgerError::BadNonce { .. } => "BadNonce",
            LedgerError::GasLimitExceeded { .. } => "GasLimitExceeded",
            LedgerError::UnknownFunction(_) => "UnknownFunction",
        }
    }
}

/// A contract call awaiting execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: AccountAddress,
    pub function: String,
    #[serde(with = "crate::types::hex_bytes")]
    pub args: Vec<u8>,
    pub gas_limit: u64,
    pub nonce: u64,
}

impl Transaction {
    /// Build a transaction for a typed call with the block gas limit.
    pub fn for_call(sender: AccountAddress, call: &Call, gas_limit: u64, nonce: u64) -> Self {
        Self {
            sender,
            function: call.function().to_string(),
            args: call.encode(),
            gas_limit,
            nonce,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxStatus {
    Success,
    /// Reverted with a stable machine-readable reason token.
    Reverted(String),
}

impl TxStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, TxStatus::Success)
    }
}

/// Immutable, topic-indexed event record; the only durable provenance store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub contract: AccountAddress,
    pub topics: Vec<Topic>,
    #[serde(with = "crate::types::hex_bytes")]
    pub data: Vec<u8>,
    pub block_number: u64,
    pub tx_index: u32,
    pub log_index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub status: TxStatus,
    pub gas_used: u64,
    pub block_number: u64,
    pub logs: Vec<LogEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    pub parent_hash: BlockHash,
    pub timestamp: u64,
    pub transactions: Vec<Transaction>,
    pub receipts: Vec<Receipt>,
    pub block_hash: BlockHash,
}

/// Named account known to the chain. Sender identity comes from here; the
/// ledger does not verify signatures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountInfo {
    pub name: String,
    #[serde(with = "crate::types::hex_bytes")]
    pub public_key: Vec<u8>,
    pub address: AccountAddress,
}

impl AccountInfo {
    pub fn new(name: impl Into<String>, public_key: Vec<u8>) -> Self {
        let address = AccountAddress::from_public_key(&public_key);
        Self {
            name: name.into(),
            public_key,
            address,
        }
    }
}

/// Log query; an unset field matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogFilter {
    pub contract: Option<AccountAddress>,
    pub topic0: Option<Topic>,
    pub topic1: Option<Topic>,
    pub topic2: Option<Topic>,
    pub from_block: Option<u64>,
    pub to_block: Option<u64>,
}

impl LogFilter {
    pub fn event(signature: &str) -> Self {
        Self {
            topic0: Some(Topic::from_signature(signature)),
            ..Self::default()
        }
    }

    pub fn with_topic1(mut self, topic: Topic) -> Self {
        self.topic1 = Some(topic);
        self
    }

    pub fn with_topic2(mut self, topic: Topic) -> Self {
        self.topic2 = Some(topic);
        self
    }

    fn matches(&self, log: &LogEntry) -> bool {
        let topic_ok = |want: &Option<Topic>, idx: usize| match want {
            None => true,
            Some(t) => log.topics.get(idx) == Some(t),
        };
        self.contract.is_none_or(|c| c == log.contract)
            && topic_ok(&self.topic0, 0)
            && topic_ok(&self.topic1, 1)
            && topic_ok(&self.topic2, 2)
            && self.from_block.is_none_or(|b| log.block_number >= b)
            && self.to_block.is_none_or(|b| log.block_number <= b)
    }
}

fn hash_block_contents(
    number: u64,
    parent_hash: &BlockHash,
    timestamp: u64,
    transactions: &[Transaction],
    receipts: &[Receipt],
) -> BlockHash {
    let mut h = Sha256::new();
    let mut bytes = |b: &[u8]| {
        h.update((b.len() as u64).to_be_bytes());
        h.update(b);
    };
    bytes(&number.to_be_bytes());
    bytes(parent_hash.as_bytes());
    bytes(&timestamp.to_be_bytes());
    bytes(&(transactions.len() as u64).to_be_bytes());
    for tx in transactions {
        bytes(tx.sender.as_bytes());
        bytes(tx.function.as_bytes());
        bytes(&tx.args);
        bytes(&tx.gas_limit.to_be_bytes());
        bytes(&tx.nonce.to_be_bytes());
    }
    bytes(&(receipts.len() as u64).to_be_bytes());
    for receipt in receipts {
        match &receipt.status {
            TxStatus::Success => bytes(b"success"),
            TxStatus::Reverted(reason) => {
                bytes(b"reverted");
                bytes(reason.as_bytes());
            }
        }
        bytes(&receipt.gas_used.to_be_bytes());
        bytes(&receipt.block_number.to_be_bytes());
        bytes(&(receipt.logs.len() as u64).to_be_bytes());
        for log in &receipt.logs {
            bytes(log.contract.as_bytes());
            bytes(&(log.topics.len() as u64).to_be_bytes());
            for topic in &log.topics {
                bytes(topic.as_bytes());
            }
            bytes(&log.data);
            bytes(&log.block_number.to_be_bytes());
            bytes(&log.tx_index.to_be_bytes());
            bytes(&log.log_index.to_be_bytes());
        }
    }
    BlockHash(h.finalize().into())
}

/// Recompute every hash and parent link over a block sequence. Holds for any
/// prefix of an honest chain.
pub fn verify_blocks(blocks: &[Block]) -> bool {
    let mut expected_parent = BlockHash::zero();
    for (i, block) in blocks.iter().enumerate() {
        if block.number != i as u64 || block.parent_hash != expected_parent {
            return false;
        }
        let recomputed = hash_block_contents(
            block.number,
            &block.parent_hash,
            block.timestamp,
            &block.transactions,
            &block.receipts,
        );
        if recomputed != block.block_hash {
            return false;
        }
        expected_parent = block.block_hash;
    }
    true
}

/// The chain plus the contract state derived from it.
///
/// Single-writer: `submit_transaction` takes `&mut self`; reads observe only
/// committed blocks. Wrap in `Arc<RwLock<_>>` to share between actors.
pub struct Ledger {
    schedule: GasSchedule,
    accounts: BTreeMap<AccountAddress, AccountInfo>,
    blocks: Vec<Block>,
    nonces: BTreeMap<AccountAddress, u64>,
    state: ContractState,
    // flat log view with topic indices, rebuilt on load
    log_cache: Vec<LogEntry>,
    topic0_index: HashMap<Topic, Vec<u32>>,
    topic1_index: HashMap<Topic, Vec<u32>>,
}

/// A ledger shared between actors.
pub type SharedLedger = std::sync::Arc<std::sync::RwLock<Ledger>>;

pub fn shared(ledger: Ledger) -> SharedLedger {
    std::sync::Arc::new(std::sync::RwLock::new(ledger))
}

impl Ledger {
    pub fn new(schedule: GasSchedule) -> Self {
        let genesis = Block {
            number: 0,
            parent_hash: BlockHash::zero(),
            timestamp: GENESIS_TIMESTAMP,
            transactions: vec![],
            receipts: vec![],
            block_hash: hash_block_contents(0, &BlockHash::zero(), GENESIS_TIMESTAMP, &[], &[]),
        };
        Self {
            schedule,
            accounts: BTreeMap::new(),
            blocks: vec![genesis],
            nonces: BTreeMap::new(),
            state: ContractState::new(),
            log_cache: Vec::new(),
            topic0_index: HashMap::new(),
            topic1_index: HashMap::new(),
        }
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.schedule
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of blocks after genesis, i.e. the number of transactions.
    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    pub fn accounts(&self) -> impl Iterator<Item = &AccountInfo> {
        self.accounts.values()
    }

    pub fn account(&self, address: &AccountAddress) -> Option<&AccountInfo> {
        self.accounts.get(address)
    }

    pub fn account_by_name(&self, name: &str) -> Option<&AccountInfo> {
        self.accounts.values().find(|a| a.name == name)
    }

    pub fn register_account(&mut self, info: AccountInfo) -> Result<(), LedgerError> {
        if self.accounts.contains_key(&info.address) {
            return Err(LedgerError::AccountExists(info.address));
        }
        self.accounts.insert(info.address, info);
        Ok(())
    }

    pub fn next_nonce(&self, sender: &AccountAddress) -> u64 {
        self.nonces.get(sender).copied().unwrap_or(0)
    }

    pub fn transaction(&self, block_number: u64, tx_index: u32) -> Option<&Transaction> {
        self.blocks
            .get(block_number as usize)?
            .transactions
            .get(tx_index as usize)
    }

    /// Read-only contract view; free of gas.
    pub fn get_maintainer(&self, asset_id: &AssetId) -> Result<AccountAddress, ContractError> {
        self.state
            .maintainer(asset_id)
            .ok_or(ContractError::UnknownAsset(*asset_id))
    }

    pub fn estimate_gas(
        &self,
        function: &str,
        n_parents: u64,
        metadata_bytes: u64,
        data_bytes: u64,
    ) -> Result<u64, UnknownFunction> {
        self.schedule
            .estimate_gas(function, n_parents, metadata_bytes, data_bytes)
    }

    pub fn max_parents_under_limit(&self) -> u64 {
        self.schedule.max_parents_under_limit()
    }

    pub fn gas_to_usd_cents(&self, gas: u64) -> f64 {
        self.schedule.gas_to_usd_cents(gas)
    }

    /// Execute a call as a transaction in a fresh block.
    ///
    /// Rejected transactions (bad nonce, gas limit, unknown function or
    /// sender) are not included in the chain and do not consume a nonce.
    /// Included transactions may still revert: the receipt records the
    /// reason, carries no logs, and state stays untouched; gas is charged
    /// either way.
    pub fn submit_transaction(&mut self, tx: Transaction) -> Result<Receipt, LedgerError> {
        if !self.accounts.contains_key(&tx.sender) {
            return Err(LedgerError::UnknownAccount(tx.sender));
        }
        let expected = self.next_nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(LedgerError::BadNonce {
                expected,
                got: tx.nonce,
            });
        }

        let decoded = Call::decode(&tx.function, &tx.args);
        let shape = match &decoded {
            Ok(call) => call.shape(),
            // gas for undecodable args is still deterministic
            Err(_) => CallShape {
                n_parents: 0,
                metadata_bytes: 0,
                data_bytes: tx.args.len() as u64,
            },
        };
        let gas_used = self.schedule.estimate_gas(
            &tx.function,
            shape.n_parents,
            shape.metadata_bytes,
            shape.data_bytes,
        )?;
        let limit = tx.gas_limit.min(self.schedule.block_gas_limit);
        if gas_used > limit {
            return Err(LedgerError::GasLimitExceeded {
                required: gas_used,
                limit,
            });
        }

        let block_number = self.blocks.len() as u64;
        let (status, logs) = match decoded {
            Ok(call) => {
                let mut scratch = self.state.clone();
                match contract::apply(&mut scratch, tx.sender, &call) {
                    Ok(events) => {
                        self.state = scratch;
                        let contract = contract_address();
                        let logs = events
                            .iter()
                            .enumerate()
                            .map(|(i, event)| {
                                let (topics, data) = event.to_log_parts();
                                LogEntry {
                                    contract,
                                    topics,
                                    data,
                                    block_number,
                                    tx_index: 0,
                                    log_index: i as u32,
                                }
                            })
                            .collect();
                        (TxStatus::Success, logs)
                    }
                    Err(err) => (TxStatus::Reverted(err.name().to_string()), vec![]),
                }
            }
            Err(_) => (
                TxStatus::Reverted(ContractError::MalformedArgs.name().to_string()),
                vec![],
            ),
        };

        let receipt = Receipt {
            status,
            gas_used,
            block_number,
            logs,
        };
        self.nonces.insert(tx.sender, expected + 1);
        self.append_block(vec![tx], vec![receipt.clone()]);
        Ok(receipt)
    }

    fn append_block(&mut self, transactions: Vec<Transaction>, receipts: Vec<Receipt>) {
        let number = self.blocks.len() as u64;
        let parent_hash = self.blocks.last().expect("genesis always present").block_hash;
        let timestamp = GENESIS_TIMESTAMP + number;
        let block_hash =
            hash_block_contents(number, &parent_hash, timestamp, &transactions, &receipts);
        let block = Block {
            number,
            parent_hash,
            timestamp,
            transactions,
            receipts,
            block_hash,
        };
        for receipt in &block.receipts {
            for log in &receipt.logs {
                self.index_log(log.clone());
            }
        }
        self.blocks.push(block);
    }

    fn index_log(&mut self, log: LogEntry) {
        let pos = self.log_cache.len() as u32;
        if let Some(t0) = log.topics.first() {
            self.topic0_index.entry(*t0).or_default().push(pos);
        }
        if let Some(t1) = log.topics.get(1) {
            self.topic1_index.entry(*t1).or_default().push(pos);
        }
        self.log_cache.push(log);
    }

    /// All logs matching the filter, in (block, tx, log) order.
    pub fn get_logs(&self, filter: &LogFilter) -> Vec<LogEntry> {
        let narrowed: Option<&Vec<u32>> = if let Some(t1) = &filter.topic1 {
            Some(match self.topic1_index.get(t1) {
                Some(v) => v,
                None => return vec![],
            })
        } else if let Some(t0) = &filter.topic0 {
            Some(match self.topic0_index.get(t0) {
                Some(v) => v,
                None => return vec![],
            })
        } else {
            None
        };
        match narrowed {
            Some(positions) => positions
                .iter()
                .map(|&p| &self.log_cache[p as usize])
                .filter(|log| filter.matches(log))
                .cloned()
                .collect(),
            None => self
                .log_cache
                .iter()
                .filter(|log| filter.matches(log))
                .cloned()
                .collect(),
        }
    }

    /// True iff every block hash recomputes and all parent links hold.
    pub fn verify_chain(&self) -> bool {
        verify_blocks(&self.blocks)
    }

    /// Test hook for corrupting the flat log view. Topic indices are not
    /// rebuilt; only unfiltered queries see the mutation.
    #[cfg(test)]
    pub(crate) fn testing_log_cache_mut(&mut self) -> &mut Vec<LogEntry> {
        &mut self.log_cache
    }

    /// Rebuild a ledger from raw parts (used by persistence). Replays every
    /// included transaction to recover contract state and nonces.
    pub(crate) fn from_parts(
        schedule: GasSchedule,
        accounts: Vec<AccountInfo>,
        blocks: Vec<Block>,
    ) -> Result<Self, persist::PersistError> {
        if blocks.is_empty() {
            return Err(persist::PersistError::Corrupt("missing genesis block".into()));
        }
        let mut ledger = Ledger::new(schedule);
        ledger.blocks = blocks;
        for info in accounts {
            ledger
                .register_account(info)
                .map_err(|e| persist::PersistError::Corrupt(e.to_string()))?;
        }
        // replay committed transactions to rebuild derived state
        let blocks = std::mem::take(&mut ledger.blocks);
        for block in blocks.iter().skip(1) {
            for (tx, receipt) in block.transactions.iter().zip(&block.receipts) {
                *ledger.nonces.entry(tx.sender).or_insert(0) = tx.nonce + 1;
                if receipt.status.is_success() {
                    let call = Call::decode(&tx.function, &tx.args).map_err(|_| {
                        persist::PersistError::Corrupt("undecodable committed call".into())
                    })?;
                    contract::apply(&mut ledger.state, tx.sender, &call).map_err(|e| {
                        persist::PersistError::Corrupt(format!(
                            "committed transaction no longer applies: {e}"
                        ))
                    })?;
                }
                for log in &receipt.logs {
                    ledger.index_log(log.clone());
                }
            }
        }
        ledger.blocks = blocks;
        Ok(ledger)
    }
}

//! Provenance tracking for AI assets on a simulated permission-less ledger.
//!
//! The crate wires together five pieces:
//!
//! - [`ledger`] — a single-chain ledger with accounts, blocks, receipts,
//!   topic-filterable event logs and a calibrated gas model;
//! - [`contract`] — the provenance contract state machine and its events;
//! - [`exchange`] — asset hashing, payload encryption and AEK sealing;
//! - [`storage`] — content-addressed external storage for ciphertexts;
//! - [`provenance`] — graph reconstruction from logs, queries and exports;
//! - [`client`] — the actor-side protocol gluing all of the above.

#![forbid(unsafe_code)]

pub mod client;
pub mod contract;
pub mod exchange;
pub mod ledger;
pub mod provenance;
pub mod storage;
pub mod types;

pub use client::{ActorContext, AuditReport, ClientError, PendingRequest};
pub use contract::{abi::Call, events::ContractEvent, ContractError, ContractState};
pub use exchange::{AssetEncryptionKey, SealedKey, SealingKeyPair};
pub use ledger::{
    gas::GasSchedule, AccountInfo, Block, Ledger, LedgerError, LogEntry, LogFilter, Receipt,
    SharedLedger, Transaction, TxStatus,
};
pub use provenance::{AssetNode, ExportFormat, ProvenanceError, ProvenanceGraph};
pub use storage::{FileStore, StorageError, StorageUrl};
pub use types::{AccountAddress, AssetId, BlockHash, Topic};

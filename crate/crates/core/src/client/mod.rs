//! The protocol participant: registration and access flows end to end,
//! driven against the shared ledger and external storage. The client
//! enforces the protocol rules the contract deliberately does not, such as
//! request/grant pairing.

pub mod keystore;

use crate::contract::abi::Call;
use crate::contract::events::{GRANT_ACCESS_SIG, REQUEST_ACCESS_SIG, URL_SIG};
use crate::contract::events::ContractEvent;
use crate::contract::ContractError;
use crate::exchange::{
    self, AssetEncryptionKey, ExchangeError, SealedKey, SEALING_X25519,
};
use crate::ledger::{LedgerError, LogFilter, Receipt, SharedLedger, Transaction};
use crate::provenance::{self, ProvenanceError, ProvenanceGraph};
use crate::storage::{FileStore, StorageError, StorageUrl};
use crate::types::{AccountAddress, AssetId, Topic};
use keystore::{Keystore, KeystoreError, StoredRequestKey};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Exchange(#[from] ExchangeError),
    #[error(transparent)]
    Keystore(#[from] KeystoreError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
    #[error("transaction reverted: {0}")]
    Reverted(String),
    #[error("asset {0} is not registered")]
    UnknownAsset(AssetId),
    #[error("a request for this asset is already pending")]
    DuplicateRequest,
    #[error("no pending request from that accessor for this asset")]
    NoPendingRequest,
    #[error("no asset encryption key for {0} in the keystore")]
    MissingAek(AssetId),
    #[error("no access grant for this account")]
    NotGranted,
    #[error("payload hash does not match the registered asset id")]
    HashMismatch,
    #[error("asset has no usable download url")]
    NoUrl,
}

impl ClientError {
    /// Stable machine-readable token, printed by the CLI on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            ClientError::Ledger(e) => e.name(),
            ClientError::Storage(e) => e.name(),
            ClientError::Exchange(ExchangeError::UnsupportedAlgorithm(_)) => {
                "UnsupportedAlgorithm"
            }
            ClientError::Exchange(ExchangeError::DecryptionFailed) => "DecryptionFailed",
            ClientError::Exchange(ExchangeError::UnsealFailed) => "UnsealFailed",
            ClientError::Keystore(_) => "KeystoreError",
            ClientError::Provenance(ProvenanceError::UnknownAsset(_)) => "UnknownAsset",
            ClientError::Provenance(ProvenanceError::InconsistentLogs(_)) => "InconsistentLogs",
            ClientError::Reverted(reason) => match reason.as_str() {
                "AssetExists" => "AssetExists",
                "UnknownParent" => "UnknownParent",
                "MalformedMetadata" => "MalformedMetadata",
                "UnknownAsset" => "UnknownAsset",
                "NotMaintainer" => "NotMaintainer",
                _ => "Reverted",
            },
            ClientError::UnknownAsset(_) => "UnknownAsset",
            ClientError::DuplicateRequest => "DuplicateRequest",
            ClientError::NoPendingRequest => "NoPendingRequest",
            ClientError::MissingAek(_) => "MissingAEK",
            ClientError::NotGranted => "NotGranted",
            ClientError::HashMismatch => "HashMismatch",
            ClientError::NoUrl => "NoUrl",
        }
    }
}

/// An access request visible on chain with no later grant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingRequest {
    pub asset_id: AssetId,
    pub accessor: AccountAddress,
    pub encryption_algorithm: String,
    pub public_key: Vec<u8>,
    pub request_block: u64,
}

/// Bundled provenance answers for one asset.
#[derive(Debug)]
pub struct AuditReport {
    pub accessors: Vec<(AccountAddress, u64)>,
    pub ancestry: ProvenanceGraph,
    pub descendants: BTreeSet<AssetId>,
}

/// One actor's view of the system: an account, its keystore, and handles to
/// the shared ledger and external storage.
pub struct ActorContext {
    account: AccountAddress,
    ledger: SharedLedger,
    store: FileStore,
    keystore: Keystore,
}

impl ActorContext {
    pub fn new(
        account: AccountAddress,
        ledger: SharedLedger,
        store: FileStore,
        keystore: Keystore,
    ) -> Self {
        Self {
            account,
            ledger,
            store,
            keystore,
        }
    }

    pub fn account(&self) -> AccountAddress {
        self.account
    }

    pub fn store(&self) -> &FileStore {
        &self.store
    }

    pub fn keystore_mut(&mut self) -> &mut Keystore {
        &mut self.keystore
    }

    fn submit(&self, call: &Call) -> Result<Receipt, ClientError> {
        let mut ledger = self.ledger.write().expect("ledger lock poisoned");
        let nonce = ledger.next_nonce(&self.account);
        let gas_limit = ledger.schedule().block_gas_limit;
        let receipt =
            ledger.submit_transaction(Transaction::for_call(self.account, call, gas_limit, nonce))?;
        match &receipt.status {
            crate::ledger::TxStatus::Success => Ok(receipt),
            crate::ledger::TxStatus::Reverted(reason) => {
                Err(ClientError::Reverted(reason.clone()))
            }
        }
    }

    /// Register a payload as a new asset: hash, encrypt under a fresh AEK,
    /// upload, then announce on chain. A failed registration leaves no
    /// keystore entry and no stored object.
    pub fn register_asset(
        &mut self,
        payload: &[u8],
        metadata: &str,
        parents: &[AssetId],
    ) -> Result<AssetId, ClientError> {
        let asset_id = exchange::compute_asset_id(payload);
        let aek = AssetEncryptionKey::generate();
        let ciphertext = exchange::encrypt_payload(&aek, payload).to_bytes();
        let url = self.store.put(&ciphertext)?;
        let call = Call::AddAsset {
            asset_id,
            metadata: metadata.as_bytes().to_vec(),
            url: url.to_string(),
            parents: parents.to_vec(),
        };
        if let Err(err) = self.submit(&call) {
            let _ = self.store.remove(&url);
            return Err(err);
        }
        self.keystore.put_aek(asset_id, aek)?;
        Ok(asset_id)
    }

    fn require_registered(&self, asset_id: &AssetId) -> Result<(), ClientError> {
        let ledger = self.ledger.read().expect("ledger lock poisoned");
        if ledger.state().is_registered(asset_id) {
            Ok(())
        } else {
            Err(ClientError::UnknownAsset(*asset_id))
        }
    }

    /// All request logs for an asset/accessor pair that have no grant at a
    /// later or equal block.
    fn open_request(
        &self,
        asset_id: &AssetId,
        accessor: &AccountAddress,
    ) -> Option<PendingRequest> {
        let ledger = self.ledger.read().expect("ledger lock poisoned");
        let asset_topic = Topic::from_asset_id(asset_id);
        let accessor_topic = Topic::from_address(accessor);
        let requests = ledger.get_logs(
            &LogFilter::event(REQUEST_ACCESS_SIG)
                .with_topic1(asset_topic)
                .with_topic2(accessor_topic),
        );
        let last_request = requests.last()?;
        let granted = ledger
            .get_logs(
                &LogFilter::event(GRANT_ACCESS_SIG)
                    .with_topic1(asset_topic)
                    .with_topic2(accessor_topic),
            )
            .iter()
            .any(|grant| grant.block_number >= last_request.block_number);
        if granted {
            return None;
        }
        let event = ContractEvent::from_log(last_request)?;
        let ContractEvent::RequestAccess {
            asset_id,
            accessor,
            encryption_algorithm,
            public_key,
        } = event
        else {
            return None;
        };
        Some(PendingRequest {
            asset_id,
            accessor,
            encryption_algorithm,
            public_key,
            request_block: last_request.block_number,
        })
    }

    /// Ask for access to an asset: create a keypair, announce the request.
    pub fn request_asset(
        &mut self,
        asset_id: &AssetId,
        algorithm: &str,
    ) -> Result<PendingRequest, ClientError> {
        self.require_registered(asset_id)?;
        if self.open_request(asset_id, &self.account).is_some() {
            return Err(ClientError::DuplicateRequest);
        }
        let keypair = exchange::generate_keypair(algorithm)?;
        let call = Call::RequestAccess {
            asset_id: *asset_id,
            encryption_algorithm: algorithm.to_string(),
            public_key: keypair.public_key.clone(),
        };
        let receipt = self.submit(&call)?;
        self.keystore.put_pending_key(
            *asset_id,
            StoredRequestKey {
                keypair: keypair.clone(),
                request_block: receipt.block_number,
            },
        )?;
        Ok(PendingRequest {
            asset_id: *asset_id,
            accessor: self.account,
            encryption_algorithm: algorithm.to_string(),
            public_key: keypair.public_key,
            request_block: receipt.block_number,
        })
    }

    /// Requests awaiting a decision on assets this actor maintains.
    pub fn list_pending_requests(&self) -> Vec<PendingRequest> {
        let ledger = self.ledger.read().expect("ledger lock poisoned");
        let requests = ledger.get_logs(&LogFilter::event(REQUEST_ACCESS_SIG));
        let mut seen: BTreeSet<(AssetId, AccountAddress)> = BTreeSet::new();
        let mut pending = Vec::new();
        // walk newest-first so only the latest request per pair counts
        for log in requests.iter().rev() {
            let Some(ContractEvent::RequestAccess {
                asset_id,
                accessor,
                encryption_algorithm,
                public_key,
            }) = ContractEvent::from_log(log)
            else {
                continue;
            };
            if !seen.insert((asset_id, accessor)) {
                continue;
            }
            if ledger.state().maintainer(&asset_id) != Some(self.account) {
                continue;
            }
            let granted = ledger
                .get_logs(
                    &LogFilter::event(GRANT_ACCESS_SIG)
                        .with_topic1(Topic::from_asset_id(&asset_id))
                        .with_topic2(Topic::from_address(&accessor)),
                )
                .iter()
                .any(|grant| grant.block_number >= log.block_number);
            if !granted {
                pending.push(PendingRequest {
                    asset_id,
                    accessor,
                    encryption_algorithm,
                    public_key,
                    request_block: log.block_number,
                });
            }
        }
        pending.sort_by_key(|p| p.request_block);
        pending
    }

    /// Grant a pending request: seal this asset's AEK under the requested
    /// public key and announce the grant.
    pub fn grant(
        &mut self,
        asset_id: &AssetId,
        accessor: &AccountAddress,
    ) -> Result<Receipt, ClientError> {
        self.require_registered(asset_id)?;
        let request = self
            .open_request(asset_id, accessor)
            .ok_or(ClientError::NoPendingRequest)?;
        let aek = self
            .keystore
            .aek(asset_id)
            .ok_or(ClientError::MissingAek(*asset_id))?
            .clone();
        let sealed = exchange::seal_aek(&request.encryption_algorithm, &request.public_key, &aek)?;
        let call = Call::GrantAccess {
            asset_id: *asset_id,
            accessor: *accessor,
            encrypted_aek: sealed.ciphertext,
        };
        self.submit(&call)
    }

    /// Latest grant for this account, if any.
    fn latest_grant(&self, asset_id: &AssetId) -> Option<(Vec<u8>, u64)> {
        let ledger = self.ledger.read().expect("ledger lock poisoned");
        let grants = ledger.get_logs(
            &LogFilter::event(GRANT_ACCESS_SIG)
                .with_topic1(Topic::from_asset_id(asset_id))
                .with_topic2(Topic::from_address(&self.account)),
        );
        let log = grants.last()?;
        match ContractEvent::from_log(log)? {
            ContractEvent::GrantAccess { encrypted_aek, .. } => {
                Some((encrypted_aek, log.block_number))
            }
            _ => None,
        }
    }

    /// URL history of an asset, newest last.
    fn urls(&self, asset_id: &AssetId) -> Vec<StorageUrl> {
        let ledger = self.ledger.read().expect("ledger lock poisoned");
        ledger
            .get_logs(&LogFilter::event(URL_SIG).with_topic1(Topic::from_asset_id(asset_id)))
            .iter()
            .filter_map(|log| match ContractEvent::from_log(log)? {
                ContractEvent::Url { url, .. } => url.parse().ok(),
                _ => None,
            })
            .collect()
    }

    /// Download, unseal, decrypt and verify an asset this actor was granted.
    pub fn fetch_asset(&mut self, asset_id: &AssetId) -> Result<Vec<u8>, ClientError> {
        self.require_registered(asset_id)?;
        let aek = match self.keystore.aek(asset_id) {
            Some(aek) => aek.clone(),
            None => {
                let (sealed_bytes, _) =
                    self.latest_grant(asset_id).ok_or(ClientError::NotGranted)?;
                let pending = self
                    .keystore
                    .pending_key(asset_id)
                    .ok_or(ClientError::Exchange(ExchangeError::UnsealFailed))?;
                let sealed = SealedKey {
                    algorithm: pending.keypair.algorithm.clone(),
                    ciphertext: sealed_bytes,
                };
                exchange::unseal_aek(
                    &pending.keypair.algorithm,
                    &pending.keypair.secret_key,
                    &sealed,
                )?
            }
        };

        // latest URL wins, earlier ones are fallbacks
        let urls = self.urls(asset_id);
        if urls.is_empty() {
            return Err(ClientError::NoUrl);
        }
        let mut ciphertext = None;
        let mut last_err = ClientError::NoUrl;
        for url in urls.iter().rev() {
            match self.store.get(url) {
                Ok(bytes) => {
                    ciphertext = Some(bytes);
                    break;
                }
                Err(err) => last_err = err.into(),
            }
        }
        let Some(ciphertext) = ciphertext else {
            return Err(last_err);
        };

        let encrypted = exchange::EncryptedPayload::from_bytes(&ciphertext)?;
        let plaintext = exchange::decrypt_payload(&aek, &encrypted)?;
        if exchange::compute_asset_id(&plaintext) != *asset_id {
            return Err(ClientError::HashMismatch);
        }
        self.keystore.put_aek(*asset_id, aek)?;
        self.keystore.remove_pending_key(asset_id)?;
        Ok(plaintext)
    }

    /// The privacy, traceability and remuneration answers for one asset.
    pub fn audit(&self, asset_id: &AssetId) -> Result<AuditReport, ClientError> {
        let ledger = self.ledger.read().expect("ledger lock poisoned");
        Ok(AuditReport {
            accessors: provenance::accessors(&ledger, asset_id)?,
            ancestry: provenance::build_ancestry(&ledger, asset_id)?,
            descendants: provenance::descendants(&ledger, asset_id)?,
        })
    }

    /// Hand an asset to a new maintainer.
    pub fn transfer(
        &mut self,
        asset_id: &AssetId,
        new_maintainer: &AccountAddress,
    ) -> Result<Receipt, ClientError> {
        self.submit(&Call::Transfer {
            asset_id: *asset_id,
            new_maintainer: *new_maintainer,
        })
    }

    /// Publish an additional download URL.
    pub fn add_url(&mut self, asset_id: &AssetId, url: &str) -> Result<Receipt, ClientError> {
        self.submit(&Call::AddUrl {
            asset_id: *asset_id,
            url: url.to_string(),
        })
    }
}

/// Package a directory into one deterministic byte stream: entries sorted by
/// relative path, no timestamps, each path and body length-prefixed.
pub fn pack_directory(dir: &Path) -> std::io::Result<Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("walked paths live under root")
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, std::fs::read(&path)?));
            }
        }
        Ok(())
    }
    let mut entries = Vec::new();
    walk(dir, dir, &mut entries)?;
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = b"AIPKG1".to_vec();
    out.extend_from_slice(&(entries.len() as u32).to_be_bytes());
    for (path, body) in entries {
        out.extend_from_slice(&(path.len() as u32).to_be_bytes());
        out.extend_from_slice(path.as_bytes());
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
    }
    Ok(out)
}

/// Default algorithm clients request access with.
pub fn default_algorithm() -> &'static str {
    SEALING_X25519
}

impl From<ContractError> for ClientError {
    fn from(err: ContractError) -> Self {
        ClientError::Reverted(err.name().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn directory_packaging_is_deterministic_and_order_independent() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("b.txt"), b"bee").unwrap();
        fs::write(dir.path().join("a.txt"), b"ay").unwrap();
        fs::write(dir.path().join("sub/c.txt"), b"sea").unwrap();
        let first = pack_directory(dir.path()).unwrap();
        let second = pack_directory(dir.path()).unwrap();
        assert_eq!(first, second);
        assert!(first.starts_with(b"AIPKG1"));
    }
}

//! Per-actor key material, persisted as hex-encoded JSON with restricted
//! file permissions. Never serialized to the chain or the store.

use crate::exchange::{AssetEncryptionKey, SealingKeyPair};
use crate::types::AssetId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum KeystoreError {
    #[error("keystore io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("keystore is corrupt: {0}")]
    Corrupt(String),
}

/// Keypair held for one outstanding access request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredRequestKey {
    pub keypair: SealingKeyPair,
    pub request_block: u64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct KeystoreData {
    /// Asset encryption keys this actor holds (as maintainer or accessor).
    aeks: BTreeMap<AssetId, AssetEncryptionKey>,
    /// One pending request keypair per asset.
    pending: BTreeMap<AssetId, StoredRequestKey>,
}

/// Durable key storage for one actor. Every mutation is written through
/// atomically (temp file then rename).
#[derive(Debug)]
pub struct Keystore {
    path: PathBuf,
    data: KeystoreData,
}

impl Keystore {
    /// Open an existing keystore or start an empty one at `path`.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, KeystoreError> {
        let path = path.into();
        let data = if path.exists() {
            let raw = fs::read_to_string(&path)?;
            serde_json::from_str(&raw).map_err(|e| KeystoreError::Corrupt(e.to_string()))?
        } else {
            KeystoreData::default()
        };
        Ok(Self { path, data })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn save(&self) -> Result<(), KeystoreError> {
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let tmp = self.path.with_extension("tmp");
        let raw = serde_json::to_string_pretty(&self.data)
            .map_err(|e| KeystoreError::Corrupt(e.to_string()))?;
        fs::write(&tmp, raw)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            fs::set_permissions(&tmp, fs::Permissions::from_mode(0o600))?;
        }
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }

    pub fn aek(&self, asset_id: &AssetId) -> Option<&AssetEncryptionKey> {
        self.data.aeks.get(asset_id)
    }

    pub fn put_aek(
        &mut self,
        asset_id: AssetId,
        aek: AssetEncryptionKey,
    ) -> Result<(), KeystoreError> {
        self.data.aeks.insert(asset_id, aek);
        self.save()
    }

    pub fn pending_key(&self, asset_id: &AssetId) -> Option<&StoredRequestKey> {
        self.data.pending.get(asset_id)
    }

    pub fn put_pending_key(
        &mut self,
        asset_id: AssetId,
        key: StoredRequestKey,
    ) -> Result<(), KeystoreError> {
        self.data.pending.insert(asset_id, key);
        self.save()
    }

    pub fn remove_pending_key(&mut self, asset_id: &AssetId) -> Result<(), KeystoreError> {
        if self.data.pending.remove(asset_id).is_some() {
            self.save()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::{generate_keypair, SEALING_X25519};

    #[test]
    fn keys_survive_a_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("keys.json");
        let asset = AssetId([1; 32]);
        let aek = AssetEncryptionKey::generate();
        {
            let mut ks = Keystore::open(&path).unwrap();
            ks.put_aek(asset, aek.clone()).unwrap();
            ks.put_pending_key(
                AssetId([2; 32]),
                StoredRequestKey {
                    keypair: generate_keypair(SEALING_X25519).unwrap(),
                    request_block: 4,
                },
            )
            .unwrap();
        }
        let ks = Keystore::open(&path).unwrap();
        assert_eq!(ks.aek(&asset), Some(&aek));
        assert_eq!(ks.pending_key(&AssetId([2; 32])).unwrap().request_block, 4);
    }

    #[cfg(unix)]
    #[test]
    fn keystore_file_permissions_are_restricted() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("keys.json");
        let mut ks = Keystore::open(&path).unwrap();
        ks.put_aek(AssetId([1; 32]), AssetEncryptionKey::generate())
            .unwrap();
        let mode = fs::metadata(&path).unwrap().permissions().mode();
        assert_eq!(mode & 0o777, 0o600);
    }
}

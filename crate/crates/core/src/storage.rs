//! External storage: a content-addressed store for encrypted payloads,
//! fully decoupled from the ledger. The chain only ever holds URLs.

use sha2::{Digest, Sha256};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("store root unavailable: {0}")]
    StoreUnavailable(String),
    #[error("object not found: {0}")]
    NotFound(String),
    #[error("integrity mismatch: stored bytes do not hash to their address")]
    IntegrityMismatch,
    #[error("malformed storage url: {0}")]
    MalformedUrl(String),
}

impl StorageError {
    pub fn name(&self) -> &'static str {
        match self {
            StorageError::StoreUnavailable(_) => "StoreUnavailable",
            StorageError::NotFound(_) => "NotFound",
            StorageError::IntegrityMismatch => "IntegrityMismatch",
            StorageError::MalformedUrl(_) => "MalformedUrl",
        }
    }
}

/// Where a stored object lives. Round-trips through its text form exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StorageUrl {
    /// Content-addressed object in the configured store.
    Store([u8; 32]),
    /// Plain file path, used for out-of-store data.
    File(PathBuf),
}

impl fmt::Display for StorageUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StorageUrl::Store(addr) => write!(f, "store://{}", hex::encode(addr)),
            StorageUrl::File(path) => write!(f, "file://{}", path.display()),
        }
    }
}

impl FromStr for StorageUrl {
    type Err = StorageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(hex_part) = s.strip_prefix("store://") {
            if hex_part.len() != 64 {
                return Err(StorageError::MalformedUrl(s.to_string()));
            }
            let mut addr = [0u8; 32];
            hex::decode_to_slice(hex_part, &mut addr)
                .map_err(|_| StorageError::MalformedUrl(s.to_string()))?;
            Ok(StorageUrl::Store(addr))
        } else if let Some(path) = s.strip_prefix("file://") {
            if path.is_empty() {
                return Err(StorageError::MalformedUrl(s.to_string()));
            }
            Ok(StorageUrl::File(PathBuf::from(path)))
        } else {
            Err(StorageError::MalformedUrl(s.to_string()))
        }
    }
}

/// Local directory store with hex content-address filenames. Writes are
/// atomic (temp file then rename), so concurrent callers are safe.
#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Content address of the given bytes, without storing anything.
    pub fn address_of(bytes: &[u8]) -> StorageUrl {
        StorageUrl::Store(Sha256::digest(bytes).into())
    }

    fn object_path(&self, addr: &[u8; 32]) -> PathBuf {
        self.root.join(hex::encode(addr))
    }

    /// Persist ciphertext; identical bytes land at the identical URL.
    pub fn put(&self, ciphertext: &[u8]) -> Result<StorageUrl, StorageError> {
        if !self.root.is_dir() {
            fs::create_dir_all(&self.root)
                .map_err(|e| StorageError::StoreUnavailable(e.to_string()))?;
        }
        let addr: [u8; 32] = Sha256::digest(ciphertext).into();
        let target = self.object_path(&addr);
        if !target.exists() {
            let tmp = target.with_extension("tmp");
            let mut file = fs::File::create(&tmp)
                .map_err(|e| StorageError::StoreUnavailable(e.to_string()))?;
            file.write_all(ciphertext)
                .map_err(|e| StorageError::StoreUnavailable(e.to_string()))?;
            file.sync_all()
                .map_err(|e| StorageError::StoreUnavailable(e.to_string()))?;
            fs::rename(&tmp, &target)
                .map_err(|e| StorageError::StoreUnavailable(e.to_string()))?;
        }
        Ok(StorageUrl::Store(addr))
    }

    /// Fetch stored bytes. Store objects are re-hashed against their address
    /// on every read.
    pub fn get(&self, url: &StorageUrl) -> Result<Vec<u8>, StorageError> {
        match url {
            StorageUrl::Store(addr) => {
                let path = self.object_path(addr);
                let bytes = fs::read(&path)
                    .map_err(|_| StorageError::NotFound(url.to_string()))?;
                let recomputed: [u8; 32] = Sha256::digest(&bytes).into();
                if recomputed != *addr {
                    return Err(StorageError::IntegrityMismatch);
                }
                Ok(bytes)
            }
            StorageUrl::File(path) => {
                fs::read(path).map_err(|_| StorageError::NotFound(url.to_string()))
            }
        }
    }

    /// Remove an object; used to roll back aborted registrations.
    pub fn remove(&self, url: &StorageUrl) -> Result<(), StorageError> {
        if let StorageUrl::Store(addr) = url {
            let path = self.object_path(addr);
            if path.exists() {
                fs::remove_file(path)
                    .map_err(|e| StorageError::StoreUnavailable(e.to_string()))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> (tempfile::TempDir, FileStore) {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::new(dir.path().join("objects"));
        (dir, store)
    }

    #[test]
    fn url_text_round_trip() {
        let url = StorageUrl::Store([0xcd; 32]);
        let text = url.to_string();
        assert_eq!(text.parse::<StorageUrl>().unwrap(), url);

        let file_url: StorageUrl = "file:///tmp/data.bin".parse().unwrap();
        assert_eq!(file_url.to_string(), "file:///tmp/data.bin");

        assert!("https://example.org".parse::<StorageUrl>().is_err());
        assert!("store://abcd".parse::<StorageUrl>().is_err());
    }

    #[test]
    fn put_is_content_addressed() {
        let (_dir, store) = store();
        let a = store.put(b"ciphertext").unwrap();
        let b = store.put(b"ciphertext").unwrap();
        let c = store.put(b"other").unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, FileStore::address_of(b"ciphertext"));
    }

    #[test]
    fn put_get_round_trip() {
        let (_dir, store) = store();
        let url = store.put(b"payload bytes").unwrap();
        assert_eq!(store.get(&url).unwrap(), b"payload bytes");
    }

    #[test]
    fn unknown_address_is_not_found() {
        let (_dir, store) = store();
        store.put(b"something").unwrap();
        let missing = StorageUrl::Store([0x11; 32]);
        assert!(matches!(
            store.get(&missing),
            Err(StorageError::NotFound(_))
        ));
    }

    #[test]
    fn corruption_is_detected_on_read() {
        let (_dir, store) = store();
        let url = store.put(b"fragile").unwrap();
        let StorageUrl::Store(addr) = &url else {
            unreachable!()
        };
        let path = store.object_path(addr);
        fs::write(&path, b"frAgile").unwrap();
        assert!(matches!(
            store.get(&url),
            Err(StorageError::IntegrityMismatch)
        ));
    }
}

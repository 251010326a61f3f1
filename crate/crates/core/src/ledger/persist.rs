//! Chain persistence: a header line with the account registry followed by
//! one JSON-encoded block per line. Loading replays the chain and verifies
//! every hash, so any on-disk tampering surfaces immediately.

use super::{AccountInfo, Block, GasSchedule, Ledger};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("chain io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("chain file is corrupt: {0}")]
    Corrupt(String),
    #[error("chain verification failed: block hashes or parent links do not recompute")]
    TamperDetected,
    #[error("chain file is locked by another process (lock file: {0})")]
    Locked(PathBuf),
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    accounts: Vec<AccountInfo>,
}

const VERSION: u32 = 1;

/// Write the chain atomically (temp file then rename).
pub fn save_chain(ledger: &Ledger, path: &Path) -> Result<(), PersistError> {
    let header = Header {
        version: VERSION,
        accounts: ledger.accounts().cloned().collect(),
    };
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        serde_json::to_writer(&mut file, &header)
            .map_err(|e| PersistError::Corrupt(e.to_string()))?;
        file.write_all(b"\n")?;
        for block in ledger.blocks() {
            serde_json::to_writer(&mut file, block)
                .map_err(|e| PersistError::Corrupt(e.to_string()))?;
            file.write_all(b"\n")?;
        }
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Load and verify a chain file.
pub fn load_chain(path: &Path, schedule: GasSchedule) -> Result<Ledger, PersistError> {
    let file = fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| PersistError::Corrupt("empty chain file".into()))??;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| PersistError::Corrupt(format!("header: {e}")))?;
    if header.version != VERSION {
        return Err(PersistError::Corrupt(format!(
            "unsupported chain version {}",
            header.version
        )));
    }
    let mut blocks: Vec<Block> = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        blocks.push(
            serde_json::from_str(&line)
                .map_err(|e| PersistError::Corrupt(format!("block: {e}")))?,
        );
    }
    let ledger = Ledger::from_parts(schedule, header.accounts, blocks)?;
    if !ledger.verify_chain() {
        return Err(PersistError::TamperDetected);
    }
    Ok(ledger)
}

/// Byte offset where block data starts; everything after it is covered by
/// the chain hashes.
pub fn blocks_region_start(path: &Path) -> Result<usize, PersistError> {
    let contents = fs::read(path)?;
    let newline = contents
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| PersistError::Corrupt("missing header line".into()))?;
    Ok(newline + 1)
}

/// Advisory single-writer lock next to the chain file. Stale locks from dead
/// processes are reclaimed.
pub struct ChainLock {
    path: PathBuf,
}

impl ChainLock {
    pub fn acquire(chain_path: &Path) -> Result<Self, PersistError> {
        let path = chain_path.with_extension("lock");
        for attempt in 0..2 {
            match fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
            {
                Ok(mut f) => {
                    let _ = write!(f, "{}", std::process::id());
                    return Ok(Self { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists && attempt == 0 => {
                    if Self::is_stale(&path) {
                        let _ = fs::remove_file(&path);
                        continue;
                    }
                    return Err(PersistError::Locked(path));
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    return Err(PersistError::Locked(path));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(PersistError::Locked(path))
    }

    fn is_stale(path: &Path) -> bool {
        match fs::read_to_string(path) {
            Ok(pid) => match pid.trim().parse::<u32>() {
                Ok(pid) => !Path::new(&format!("/proc/{pid}")).exists(),
                Err(_) => true,
            },
            Err(_) => false,
        }
    }
}

impl Drop for ChainLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::abi::Call;
    use crate::ledger::Transaction;
    use crate::types::AssetId;

    fn sample_ledger() -> Ledger {
        let mut ledger = Ledger::new(GasSchedule::default());
        let info = AccountInfo::new("alice", vec![1; 32]);
        let sender = info.address;
        ledger.register_account(info).unwrap();
        for i in 1..=3u8 {
            let call = Call::AddAsset {
                asset_id: AssetId([i; 32]),
                metadata: br#"{"name":"a","asset_type":"model"}"#.to_vec(),
                url: format!("store://{}", "0".repeat(64)),
                parents: if i == 1 { vec![] } else { vec![AssetId([i - 1; 32])] },
            };
            let nonce = ledger.next_nonce(&sender);
            ledger
                .submit_transaction(Transaction::for_call(sender, &call, 7_000_000, nonce))
                .unwrap();
        }
        ledger
    }

    #[test]
    fn save_load_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.jsonl");
        let ledger = sample_ledger();
        save_chain(&ledger, &path).unwrap();
        let loaded = load_chain(&path, GasSchedule::default()).unwrap();
        assert_eq!(loaded.blocks(), ledger.blocks());
        assert_eq!(loaded.state(), ledger.state());
        assert_eq!(loaded.next_nonce(&ledger.accounts().next().unwrap().address), 3);
        assert!(loaded.verify_chain());
    }

    #[test]
    fn single_byte_tamper_is_detected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.jsonl");
        save_chain(&sample_ledger(), &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let start = blocks_region_start(&path).unwrap();
        // flip a byte in the middle of the block region
        let pos = start + (bytes.len() - start) / 2;
        bytes[pos] ^= 0x01;
        fs::write(&path, &bytes).unwrap();
        assert!(load_chain(&path, GasSchedule::default()).is_err());
    }

    #[test]
    fn lock_is_exclusive_and_released_on_drop() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.jsonl");
        let lock = ChainLock::acquire(&path).unwrap();
        assert!(matches!(
            ChainLock::acquire(&path),
            Err(PersistError::Locked(_))
        ));
        drop(lock);
        let _relock = ChainLock::acquire(&path).unwrap();
    }
}

//! Canonical argument encoding for contract calls.
//!
//! Every field is a 4-byte big-endian length followed by the raw bytes;
//! the parent list adds a 4-byte count before its entries. The encoding is
//! what gets hashed into blocks and what gas metering measures.

use crate::types::{AccountAddress, AssetId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed call arguments")]
pub struct AbiError;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }

    fn field(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(bytes);
    }

    fn count(&mut self, n: u32) {
        self.buf.extend_from_slice(&n.to_be_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn u32(&mut self) -> Result<u32, AbiError> {
        let end = self.pos.checked_add(4).ok_or(AbiError)?;
        let bytes = self.buf.get(self.pos..end).ok_or(AbiError)?;
        self.pos = end;
        Ok(u32::from_be_bytes(bytes.try_into().expect("4-byte slice")))
    }

    fn field(&mut self) -> Result<&'a [u8], AbiError> {
        let len = self.u32()? as usize;
        let end = self.pos.checked_add(len).ok_or(AbiError)?;
        let bytes = self.buf.get(self.pos..end).ok_or(AbiError)?;
        self.pos = end;
        Ok(bytes)
    }

    fn fixed<const N: usize>(&mut self) -> Result<[u8; N], AbiError> {
        let bytes = self.field()?;
        bytes.try_into().map_err(|_| AbiError)
    }

    fn finish(self) -> Result<(), AbiError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(AbiError)
        }
    }
}

/// Decoded arguments of any contract call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Call {
    AddAsset {
        asset_id: AssetId,
        metadata: Vec<u8>,
        url: String,
        parents: Vec<AssetId>,
    },
    Transfer {
        asset_id: AssetId,
        new_maintainer: AccountAddress,
    },
    AddUrl {
        asset_id: AssetId,
        url: String,
    },
    RequestAccess {
        asset_id: AssetId,
        encryption_algorithm: String,
        public_key: Vec<u8>,
    },
    GrantAccess {
        asset_id: AssetId,
        accessor: AccountAddress,
        encrypted_aek: Vec<u8>,
    },
}

/// Byte counts gas metering needs from a call: parent count, Register event
/// data length, and the summed data length of the other fixed events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallShape {
    pub n_parents: u64,
    pub metadata_bytes: u64,
    pub data_bytes: u64,
}

impl Call {
    pub fn function(&self) -> &'static str {
        match self {
            Call::AddAsset { .. } => "addAsset",
            Call::Transfer { .. } => "transfer",
            Call::AddUrl { .. } => "addUrl",
            Call::RequestAccess { .. } => "requestAccess",
            Call::GrantAccess { .. } => "grantAccess",
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        match self {
            Call::AddAsset {
                asset_id,
                metadata,
                url,
                parents,
            } => {
                w.field(asset_id.as_bytes());
                w.field(metadata);
                w.field(url.as_bytes());
                w.count(parents.len() as u32);
                for parent in parents {
                    w.field(parent.as_bytes());
                }
            }
            Call::Transfer {
                asset_id,
                new_maintainer,
            } => {
                w.field(asset_id.as_bytes());
                w.field(new_maintainer.as_bytes());
            }
            Call::AddUrl { asset_id, url } => {
                w.field(asset_id.as_bytes());
                w.field(url.as_bytes());
            }
            Call::RequestAccess {
                asset_id,
                encryption_algorithm,
                public_key,
            } => {
                w.field(asset_id.as_bytes());
                w.field(encryption_algorithm.as_bytes());
                w.field(public_key);
            }
            Call::GrantAccess {
                asset_id,
                accessor,
                encrypted_aek,
            } => {
                w.field(asset_id.as_bytes());
                w.field(accessor.as_bytes());
                w.field(encrypted_aek);
            }
        }
        w.buf
    }

    pub fn decode(function: &str, args: &[u8]) -> Result<Self, AbiError> {
        let mut r = Reader::new(args);
        let call = match function {
            "addAsset" => {
                let asset_id = AssetId(r.fixed()?);
                let metadata = r.field()?.to_vec();
                let url = String::from_utf8(r.field()?.to_vec()).map_err(|_| AbiError)?;
                let count = r.u32()?;
                let mut parents = Vec::with_capacity(count as usize);
                for _ in 0..count {
                    parents.push(AssetId(r.fixed()?));
                }
                Call::AddAsset {
                    asset_id,
                    metadata,
                    url,
                    parents,
                }
            }
            "transfer" => Call::Transfer {
                asset_id: AssetId(r.fixed()?),
                new_maintainer: AccountAddress(r.fixed()?),
            },
            "addUrl" => Call::AddUrl {
                asset_id: AssetId(r.fixed()?),
                url: String::from_utf8(r.field()?.to_vec()).map_err(|_| AbiError)?,
            },
            "requestAccess" => Call::RequestAccess {
                asset_id: AssetId(r.fixed()?),
                encryption_algorithm: String::from_utf8(r.field()?.to_vec())
                    .map_err(|_| AbiError)?,
                public_key: r.field()?.to_vec(),
            },
            "grantAccess" => Call::GrantAccess {
                asset_id: AssetId(r.fixed()?),
                accessor: AccountAddress(r.fixed()?),
                encrypted_aek: r.field()?.to_vec(),
            },
            _ => return Err(AbiError),
        };
        r.finish()?;
        Ok(call)
    }

    /// Logged-data byte counts, matching what executing this call will emit.
    pub fn shape(&self) -> CallShape {
        const PREFIX: u64 = 4;
        match self {
            Call::AddAsset {
                metadata,
                url,
                parents,
                ..
            } => CallShape {
                n_parents: parents.len() as u64,
                metadata_bytes: PREFIX + metadata.len() as u64,
                data_bytes: PREFIX + url.len() as u64,
            },
            Call::Transfer { .. } => CallShape {
                n_parents: 0,
                metadata_bytes: 0,
                data_bytes: PREFIX + AccountAddress::LEN as u64,
            },
            Call::AddUrl { url, .. } => CallShape {
                n_parents: 0,
                metadata_bytes: 0,
                data_bytes: PREFIX + url.len() as u64,
            },
            Call::RequestAccess {
                encryption_algorithm,
                public_key,
                ..
            } => CallShape {
                n_parents: 0,
                metadata_bytes: 0,
                data_bytes: 2 * PREFIX
                    + encryption_algorithm.len() as u64
                    + public_key.len() as u64,
            },
            Call::GrantAccess { encrypted_aek, .. } => CallShape {
                n_parents: 0,
                metadata_bytes: 0,
                data_bytes: PREFIX + encrypted_aek.len() as u64,
            },
        }
    }
}

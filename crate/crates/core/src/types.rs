//! Shared domain newtypes: addresses, asset identifiers, topics and hashes.
//!
//! All byte-valued types serialize as lowercase hex strings so that chain
//! files, keystores and exports stay greppable.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

/// Parse a fixed-size lowercase hex string into a byte array.
fn parse_hex<const N: usize>(s: &str) -> Result<[u8; N], HexError> {
    if s.len() != N * 2 {
        return Err(HexError::BadLength {
            expected: N * 2,
            got: s.len(),
        });
    }
    if s.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(HexError::NotLowercase);
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(s, &mut out).map_err(|_| HexError::BadDigit)?;
    Ok(out)
}

/// Errors from parsing hex-encoded identifiers.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HexError {
    #[error("expected {expected} hex characters, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("hex identifiers are lowercase")]
    NotLowercase,
    #[error("invalid hex digit")]
    BadDigit,
}

macro_rules! hex_bytes_newtype {
    ($(#[$doc:meta])* $name:ident, $len:expr) => {
        $(#[$doc])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            pub fn from_hex(s: &str) -> Result<Self, HexError> {
                parse_hex::<$len>(s).map(Self)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "({})"), self.to_hex())
            }
        }

        impl FromStr for $name {
            type Err = HexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::from_hex(s)
            }
        }

        impl From<[u8; $len]> for $name {
            fn from(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                Self::from_hex(&s).map_err(de::Error::custom)
            }
        }
    };
}

hex_bytes_newtype!(
    /// 20-byte account identifier, derived from the account's public key.
    AccountAddress,
    20
);

hex_bytes_newtype!(
    /// 32-byte content hash identifying an AI asset (SHA-256 of its plaintext).
    AssetId,
    32
);

hex_bytes_newtype!(
    /// 32-byte hash linking blocks into a chain.
    BlockHash,
    32
);

hex_bytes_newtype!(
    /// 32-byte indexed log value. `topic0` identifies the event kind, later
    /// topics carry indexed arguments.
    Topic,
    32
);

impl AccountAddress {
    /// Derive an address from a signing public key: the trailing 20 bytes of
    /// its SHA-256 digest.
    pub fn from_public_key(public_key: &[u8]) -> Self {
        let digest = Sha256::digest(public_key);
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest[12..32]);
        Self(out)
    }
}

impl BlockHash {
    pub fn zero() -> Self {
        Self([0u8; 32])
    }
}

impl Topic {
    /// Topic for an indexed asset identifier.
    pub fn from_asset_id(id: &AssetId) -> Self {
        Self(id.0)
    }

    /// Topic for an indexed address: right-aligned in 32 bytes.
    pub fn from_address(addr: &AccountAddress) -> Self {
        let mut out = [0u8; 32];
        out[12..].copy_from_slice(&addr.0);
        Self(out)
    }

    /// Hash of a canonical event signature string, e.g. `ParentOf(bytes32,bytes32)`.
    pub fn from_signature(signature: &str) -> Self {
        Self(Sha256::digest(signature.as_bytes()).into())
    }

    pub fn to_asset_id(&self) -> AssetId {
        AssetId(self.0)
    }

    pub fn to_address(&self) -> AccountAddress {
        let mut out = [0u8; 20];
        out.copy_from_slice(&self.0[12..]);
        AccountAddress(out)
    }
}

/// Serde adapter for `Vec<u8>` fields stored as hex strings.
pub mod hex_bytes {
    use super::*;

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(&s).map_err(de::Error::custom)
    }
}

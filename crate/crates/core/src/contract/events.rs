//! The seven contract events and their log representation.
//!
//! The asset id is always `topic1`; the accessor, where present, is
//! `topic2`. Non-indexed fields go to the data section as 4-byte
//! length-prefixed values in declaration order.

use crate::ledger::LogEntry;
use crate::types::{AccountAddress, AssetId, Topic};

pub const REGISTER_SIG: &str = "Register(bytes32,string)";
pub const URL_SIG: &str = "URL(bytes32,string)";
pub const FORMER_MAINTAINER_SIG: &str = "FormerMaintainer(bytes32,address)";
pub const PARENT_OF_SIG: &str = "ParentOf(bytes32,bytes32)";
pub const CHILD_OF_SIG: &str = "ChildOf(bytes32,bytes32)";
pub const REQUEST_ACCESS_SIG: &str = "RequestAccess(bytes32,address,string,bytes)";
pub const GRANT_ACCESS_SIG: &str = "GrantAccess(bytes32,address,bytes)";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContractEvent {
    Register {
        asset_id: AssetId,
        metadata: Vec<u8>,
    },
    Url {
        asset_id: AssetId,
        url: String,
    },
    FormerMaintainer {
        asset_id: AssetId,
        previous_maintainer: AccountAddress,
    },
    ParentOf {
        asset_id: AssetId,
        parent_id: AssetId,
    },
    ChildOf {
        asset_id: AssetId,
        child_id: AssetId,
    },
    RequestAccess {
        asset_id: AssetId,
        accessor: AccountAddress,
        encryption_algorithm: String,
        public_key: Vec<u8>,
    },
    GrantAccess {
        asset_id: AssetId,
        accessor: AccountAddress,
        encrypted_aek: Vec<u8>,
    },
}

fn data_fields(fields: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for f in fields {
        out.extend_from_slice(&(f.len() as u32).to_be_bytes());
        out.extend_from_slice(f);
    }
    out
}

fn split_fields(data: &[u8], n: usize) -> Option<Vec<Vec<u8>>> {
    let mut out = Vec::with_capacity(n);
    let mut pos = 0usize;
    for _ in 0..n {
        let len = u32::from_be_bytes(data.get(pos..pos + 4)?.try_into().ok()?) as usize;
        pos += 4;
        out.push(data.get(pos..pos + len)?.to_vec());
        pos += len;
    }
    (pos == data.len()).then_some(out)
}

impl ContractEvent {
    pub fn signature(&self) -> &'static str {
        match self {
            ContractEvent::Register { .. } => REGISTER_SIG,
            ContractEvent::Url { .. } => URL_SIG,
            ContractEvent::FormerMaintainer { .. } => FORMER_MAINTAINER_SIG,
            ContractEvent::ParentOf { .. } => PARENT_OF_SIG,
            ContractEvent::ChildOf { .. } => CHILD_OF_SIG,
            ContractEvent::RequestAccess { .. } => REQUEST_ACCESS_SIG,
            ContractEvent::GrantAccess { .. } => GRANT_ACCESS_SIG,
        }
    }

    /// Topics and data as stored in a log entry.
    pub fn to_log_parts(&self) -> (Vec<Topic>, Vec<u8>) {
        let topic0 = Topic::from_signature(self.signature());
        match self {
            ContractEvent::Register { asset_id, metadata } => (
                vec![topic0, Topic::from_asset_id(asset_id)],
                data_fields(&[metadata]),
            ),
            ContractEvent::Url { asset_id, url } => (
                vec![topic0, Topic::from_asset_id(asset_id)],
                data_fields(&[url.as_bytes()]),
            ),
            ContractEvent::FormerMaintainer {
                asset_id,
                previous_maintainer,
            } => (
                vec![topic0, Topic::from_asset_id(asset_id)],
                data_fields(&[previous_maintainer.as_bytes()]),
            ),
            ContractEvent::ParentOf {
                asset_id,
                parent_id,
            } => (
                vec![topic0, Topic::from_asset_id(asset_id)],
                data_fields(&[parent_id.as_bytes()]),
            ),
            ContractEvent::ChildOf { asset_id, child_id } => (
                vec![topic0, Topic::from_asset_id(asset_id)],
                data_fields(&[child_id.as_bytes()]),
            ),
            ContractEvent::RequestAccess {
                asset_id,
                accessor,
                encryption_algorithm,
                public_key,
            } => (
                vec![
                    topic0,
                    Topic::from_asset_id(asset_id),
                    Topic::from_address(accessor),
                ],
                data_fields(&[encryption_algorithm.as_bytes(), public_key]),
            ),
            ContractEvent::GrantAccess {
                asset_id,
                accessor,
                encrypted_aek,
            } => (
                vec![
                    topic0,
                    Topic::from_asset_id(asset_id),
                    Topic::from_address(accessor),
                ],
                data_fields(&[encrypted_aek]),
            ),
        }
    }

    /// Parse a log entry back into the event it encodes. Returns `None` for
    /// logs of unknown shape.
    pub fn from_log(log: &LogEntry) -> Option<Self> {
        let topic0 = *log.topics.first()?;
        let asset_id = log.topics.get(1)?.to_asset_id();
        let event = if topic0 == Topic::from_signature(REGISTER_SIG) {
            let fields = split_fields(&log.data, 1)?;
            ContractEvent::Register {
                asset_id,
                metadata: fields[0].clone(),
            }
        } else if topic0 == Topic::from_signature(URL_SIG) {
            let fields = split_fields(&log.data, 1)?;
            ContractEvent::Url {
                asset_id,
                url: String::from_utf8(fields[0].clone()).ok()?,
            }
        } else if topic0 == Topic::from_signature(FORMER_MAINTAINER_SIG) {
            let fields = split_fields(&log.data, 1)?;
            ContractEvent::FormerMaintainer {
                asset_id,
                previous_maintainer: AccountAddress(fields[0].as_slice().try_into().ok()?),
            }
        } else if topic0 == Topic::from_signature(PARENT_OF_SIG) {
            let fields = split_fields(&log.data, 1)?;
            ContractEvent::ParentOf {
                asset_id,
                parent_id: AssetId(fields[0].as_slice().try_into().ok()?),
            }
        } else if topic0 == Topic::from_signature(CHILD_OF_SIG) {
            let fields = split_fields(&log.data, 1)?;
            ContractEvent::ChildOf {
                asset_id,
                child_id: AssetId(fields[0].as_slice().try_into().ok()?),
            }
        } else if topic0 == Topic::from_signature(REQUEST_ACCESS_SIG) {
            let accessor = log.topics.get(2)?.to_address();
            let fields = split_fields(&log.data, 2)?;
            ContractEvent::RequestAccess {
                asset_id,
                accessor,
                encryption_algorithm: String::from_utf8(fields[0].clone()).ok()?,
                public_key: fields[1].clone(),
            }
        } else if topic0 == Topic::from_signature(GRANT_ACCESS_SIG) {
            let accessor = log.topics.get(2)?.to_address();
            let fields = split_fields(&log.data, 1)?;
            ContractEvent::GrantAccess {
                asset_id,
                accessor,
                encrypted_aek: fields[0].clone(),
            }
        } else {
            return None;
        };
        Some(event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_of(event: &ContractEvent) -> LogEntry {
        let (topics, data) = event.to_log_parts();
        LogEntry {
            contract: AccountAddress([0; 20]),
            topics,
            data,
            block_number: 1,
            tx_index: 0,
            log_index: 0,
        }
    }

    #[test]
    fn events_survive_the_log_round_trip() {
        let events = [
            ContractEvent::Register {
                asset_id: AssetId([1; 32]),
                metadata: br#"{"name":"a"}"#.to_vec(),
            },
            ContractEvent::Url {
                asset_id: AssetId([1; 32]),
                url: "store://ab".into(),
            },
            ContractEvent::FormerMaintainer {
                asset_id: AssetId([1; 32]),
                previous_maintainer: AccountAddress([2; 20]),
            },
            ContractEvent::ParentOf {
                asset_id: AssetId([1; 32]),
                parent_id: AssetId([3; 32]),
            },
            ContractEvent::ChildOf {
                asset_id: AssetId([3; 32]),
                child_id: AssetId([1; 32]),
            },
            ContractEvent::RequestAccess {
                asset_id: AssetId([1; 32]),
                accessor: AccountAddress([4; 20]),
                encryption_algorithm: "x25519-xsalsa20-poly1305".into(),
                public_key: vec![7; 32],
            },
            ContractEvent::GrantAccess {
                asset_id: AssetId([1; 32]),
                accessor: AccountAddress([4; 20]),
                encrypted_aek: vec![8; 80],
            },
        ];
        for event in events {
            assert_eq!(ContractEvent::from_log(&log_of(&event)), Some(event));
        }
    }

    #[test]
    fn asset_id_is_topic1_and_accessor_topic2() {
        let event = ContractEvent::RequestAccess {
            asset_id: AssetId([9; 32]),
            accessor: AccountAddress([5; 20]),
            encryption_algorithm: "alg".into(),
            public_key: vec![],
        };
        let (topics, _) = event.to_log_parts();
        assert_eq!(topics.len(), 3);
        assert_eq!(topics[1].to_asset_id(), AssetId([9; 32]));
        assert_eq!(topics[2].to_address(), AccountAddress([5; 20]));
    }
}

//! The provenance contract: a deterministic state machine over six
//! functions, emitting the events that make provenance reconstructable.
//!
//! State is minimal on purpose: only the asset id to maintainer map,
//! because access control and `getMaintainer` need readable state. All
//! provenance lives in the logs and the state stays fully rebuildable
//! from them (see [`replay`]).

pub mod abi;
pub mod events;
pub mod replay;

use crate::types::{AccountAddress, AssetId};
use abi::Call;
use events::ContractEvent;
use serde_json::Value;
use std::collections::BTreeMap;

/// Revert reasons. `name()` values are stable machine-readable tokens and
/// are what receipts carry.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContractError {
    #[error("asset {0} is already registered")]
    AssetExists(AssetId),
    #[error("parent {0} is not registered")]
    UnknownParent(AssetId),
    #[error("metadata is not a JSON object")]
    MalformedMetadata,
    #[error("asset {0} is not registered")]
    UnknownAsset(AssetId),
    #[error("caller is not the maintainer")]
    NotMaintainer,
    #[error("malformed call arguments")]
    MalformedArgs,
}

impl ContractError {
    pub fn name(&self) -> &'static str {
        match self {
            ContractError::AssetExists(_) => "AssetExists",
            ContractError::UnknownParent(_) => "UnknownParent",
            ContractError::MalformedMetadata => "MalformedMetadata",
            ContractError::UnknownAsset(_) => "UnknownAsset",
            ContractError::NotMaintainer => "NotMaintainer",
            ContractError::MalformedArgs => "MalformedArgs",
        }
    }
}

/// Mutable contract state: one record per registered asset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContractState {
    maintainers: BTreeMap<AssetId, AccountAddress>,
}

impl ContractState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_registered(&self, asset_id: &AssetId) -> bool {
        self.maintainers.contains_key(asset_id)
    }

    pub fn maintainer(&self, asset_id: &AssetId) -> Option<AccountAddress> {
        self.maintainers.get(asset_id).copied()
    }

    pub fn registered_assets(&self) -> impl Iterator<Item = &AssetId> {
        self.maintainers.keys()
    }

    pub fn len(&self) -> usize {
        self.maintainers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maintainers.is_empty()
    }

    pub(crate) fn insert(&mut self, asset_id: AssetId, maintainer: AccountAddress) {
        self.maintainers.insert(asset_id, maintainer);
    }

    fn require_registered(&self, asset_id: &AssetId) -> Result<(), ContractError> {
        if self.is_registered(asset_id) {
            Ok(())
        } else {
            Err(ContractError::UnknownAsset(*asset_id))
        }
    }

    fn require_maintainer(
        &self,
        caller: &AccountAddress,
        asset_id: &AssetId,
    ) -> Result<(), ContractError> {
        self.require_registered(asset_id)?;
        if self.maintainer(asset_id).as_ref() == Some(caller) {
            Ok(())
        } else {
            Err(ContractError::NotMaintainer)
        }
    }
}

/// Execute one call against the state. On error the state must be discarded
/// by the caller; the ledger applies calls to a scratch copy.
pub fn apply(
    state: &mut ContractState,
    caller: AccountAddress,
    call: &Call,
) -> Result<Vec<ContractEvent>, ContractError> {
    match call {
        Call::AddAsset {
            asset_id,
            metadata,
            url,
            parents,
        } => {
            if state.is_registered(asset_id) {
                return Err(ContractError::AssetExists(*asset_id));
            }
            let parsed: Value =
                serde_json::from_slice(metadata).map_err(|_| ContractError::MalformedMetadata)?;
            if !parsed.is_object() {
                return Err(ContractError::MalformedMetadata);
            }
            for parent in parents {
                if !state.is_registered(parent) {
                    return Err(ContractError::UnknownParent(*parent));
                }
            }
            state.insert(*asset_id, caller);
            let mut events = vec![
                ContractEvent::Register {
                    asset_id: *asset_id,
                    metadata: metadata.clone(),
                },
                ContractEvent::Url {
                    asset_id: *asset_id,
                    url: url.clone(),
                },
            ];
            for parent in parents {
                events.push(ContractEvent::ParentOf {
                    asset_id: *asset_id,
                    parent_id: *parent,
                });
                events.push(ContractEvent::ChildOf {
                    asset_id: *parent,
                    child_id: *asset_id,
                });
            }
            Ok(events)
        }
        Call::Transfer {
            asset_id,
            new_maintainer,
        } => {
            state.require_maintainer(&caller, asset_id)?;
            let previous = state
                .maintainer(asset_id)
                .expect("maintainer checked above");
            state.insert(*asset_id, *new_maintainer);
            Ok(vec![ContractEvent::FormerMaintainer {
                asset_id: *asset_id,
                previous_maintainer: previous,
            }])
        }
        Call::AddUrl { asset_id, url } => {
            state.require_maintainer(&caller, asset_id)?;
            Ok(vec![ContractEvent::Url {
                asset_id: *asset_id,
                url: url.clone(),
            }])
        }
        Call::RequestAccess {
            asset_id,
            encryption_algorithm,
            public_key,
        } => {
            state.require_registered(asset_id)?;
            Ok(vec![ContractEvent::RequestAccess {
                asset_id: *asset_id,
                accessor: caller,
                encryption_algorithm: encryption_algorithm.clone(),
                public_key: public_key.clone(),
            }])
        }
        Call::GrantAccess {
            asset_id,
            accessor,
            encrypted_aek,
        } => {
            // request/grant pairing is a client-protocol duty; proactive
            // grants are harmless at the contract level
            state.require_maintainer(&caller, asset_id)?;
            Ok(vec![ContractEvent::GrantAccess {
                asset_id: *asset_id,
                accessor: *accessor,
                encrypted_aek: encrypted_aek.clone(),
            }])
        }
    }
}

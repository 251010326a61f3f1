//! Rebuild contract state purely from the event log.
//!
//! `Register` and `FormerMaintainer` events carry no "new maintainer" field
//! (they mirror the on-chain event layout), so the replay joins each event
//! to the public chain data it points into: the registering transaction's
//! sender, and the transfer transaction's decoded argument. Live state and
//! replayed state must agree after any call sequence.

use super::abi::Call;
use super::events::ContractEvent;
use super::ContractState;
use crate::ledger::Ledger;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("log points to a missing transaction at block {block}, index {tx_index}")]
    DanglingLog { block: u64, tx_index: u32 },
    #[error("inconsistent logs: {0}")]
    Inconsistent(String),
}

/// Scan every log and rebuild the maintainer map.
pub fn rebuild_state(ledger: &Ledger) -> Result<ContractState, ReplayError> {
    let mut state = ContractState::new();
    for block in ledger.blocks() {
        for receipt in &block.receipts {
            for log in &receipt.logs {
                let Some(event) = ContractEvent::from_log(log) else {
                    continue;
                };
                match event {
                    ContractEvent::Register { asset_id, .. } => {
                        let tx = ledger
                            .transaction(log.block_number, log.tx_index)
                            .ok_or(ReplayError::DanglingLog {
                                block: log.block_number,
                                tx_index: log.tx_index,
                            })?;
                        if state.is_registered(&asset_id) {
                            return Err(ReplayError::Inconsistent(format!(
                                "duplicate Register for {asset_id}"
                            )));
                        }
                        state.insert(asset_id, tx.sender);
                    }
                    ContractEvent::FormerMaintainer {
                        asset_id,
                        previous_maintainer,
                    } => {
                        if state.maintainer(&asset_id) != Some(previous_maintainer) {
                            return Err(ReplayError::Inconsistent(format!(
                                "FormerMaintainer for {asset_id} does not match replayed state"
                            )));
                        }
                        let tx = ledger
                            .transaction(log.block_number, log.tx_index)
                            .ok_or(ReplayError::DanglingLog {
                                block: log.block_number,
                                tx_index: log.tx_index,
                            })?;
                        let call = Call::decode(&tx.function, &tx.args).map_err(|_| {
                            ReplayError::Inconsistent("undecodable transfer call".into())
                        })?;
                        let Call::Transfer { new_maintainer, .. } = call else {
                            return Err(ReplayError::Inconsistent(
                                "FormerMaintainer emitted by a non-transfer call".into(),
                            ));
                        };
                        state.insert(asset_id, new_maintainer);
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(state)
}

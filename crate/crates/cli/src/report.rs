//! Gas report: per-action rows with gas and USD-cent costs plus totals.
//!
//! When a scenario sidecar maps actions to blocks, rows aggregate like the
//! use case's cost table; otherwise every transaction gets its own row.

use crate::scenario::ActionRecord;
use aiprov_core::ledger::gas::format_cents;
use aiprov_core::{GasSchedule, Ledger};
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, Serialize)]
pub struct GasRow {
    pub label: String,
    pub gas: u64,
    pub cents: f64,
}

#[derive(Debug, Serialize)]
pub struct GasReport {
    pub rows: Vec<GasRow>,
    pub total_gas: u64,
    pub total_cents: f64,
    pub total_usd: f64,
}

/// Sum of gas spent in the given blocks.
fn gas_in_blocks(ledger: &Ledger, blocks: &[u64]) -> u64 {
    blocks
        .iter()
        .filter_map(|&n| ledger.blocks().get(n as usize))
        .flat_map(|b| b.receipts.iter())
        .map(|r| r.gas_used)
        .sum()
}

pub fn build(ledger: &Ledger, actions: Option<&[ActionRecord]>) -> GasReport {
    let schedule = ledger.schedule();
    let rows: Vec<GasRow> = match actions {
        Some(actions) => actions
            .iter()
            .map(|action| {
                let gas = gas_in_blocks(ledger, &action.blocks);
                GasRow {
                    label: action.label.clone(),
                    gas,
                    cents: schedule.gas_to_usd_cents(gas),
                }
            })
            .collect(),
        None => ledger
            .blocks()
            .iter()
            .skip(1)
            .flat_map(|block| {
                block.transactions.iter().zip(&block.receipts).map(|(tx, r)| GasRow {
                    label: format!("block {}: {}", block.number, tx.function),
                    gas: r.gas_used,
                    cents: schedule.gas_to_usd_cents(r.gas_used),
                })
            })
            .collect(),
    };
    finish(rows, schedule)
}

fn finish(rows: Vec<GasRow>, schedule: &GasSchedule) -> GasReport {
    let total_gas: u64 = rows.iter().map(|r| r.gas).sum();
    GasReport {
        total_gas,
        total_cents: schedule.gas_to_usd_cents(total_gas),
        total_usd: schedule.gas_to_usd(total_gas),
        rows,
    }
}

impl GasReport {
    pub fn render_text(&self) -> String {
        let label_width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .chain(std::iter::once("Total".len()))
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<label_width$}  {:>10}  {:>8}",
            "Action", "Gas", "Cost(c)"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<label_width$}  {:>10}  {:>8}",
                row.label,
                row.gas,
                format_cents(row.cents)
            );
        }
        let _ = writeln!(
            out,
            "{:<label_width$}  {:>10}  {:>8}",
            "Total",
            self.total_gas,
            format_cents(self.total_cents)
        );
        let _ = writeln!(out, "Total cost: {:.4} USD", self.total_usd);
        out
    }

    pub fn render_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report structs always serialize");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aiprov_core::{AccountInfo, Call, GasSchedule, Transaction};

    #[test]
    fn per_transaction_rows_without_a_sidecar() {
        let mut ledger = Ledger::new(GasSchedule::default());
        let info = AccountInfo::new("a", vec![1; 32]);
        let sender = info.address;
        ledger.register_account(info).unwrap();
        let call = Call::AddAsset {
            asset_id: aiprov_core::AssetId([1; 32]),
            metadata: br#"{"name":"x","asset_type":"model"}"#.to_vec(),
            url: "store://aa".into(),
            parents: vec![],
        };
        ledger
            .submit_transaction(Transaction::for_call(sender, &call, 7_000_000, 0))
            .unwrap();
        let report = build(&ledger, None);
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].label.contains("addAsset"));
        assert_eq!(report.total_gas, report.rows[0].gas);
    }

    #[test]
    fn action_rows_aggregate_blocks() {
        let mut ledger = Ledger::new(GasSchedule::default());
        let info = AccountInfo::new("a", vec![1; 32]);
        let sender = info.address;
        ledger.register_account(info).unwrap();
        for i in 1..=2u8 {
            let call = Call::AddAsset {
                asset_id: aiprov_core::AssetId([i; 32]),
                metadata: br#"{"name":"x","asset_type":"model"}"#.to_vec(),
                url: "store://aa".into(),
                parents: vec![],
            };
            let nonce = ledger.next_nonce(&sender);
            ledger
                .submit_transaction(Transaction::for_call(sender, &call, 7_000_000, nonce))
                .unwrap();
        }
        let actions = vec![ActionRecord {
            label: "both registrations".into(),
            blocks: vec![1, 2],
        }];
        let report = build(&ledger, Some(&actions));
        assert_eq!(report.rows.len(), 1);
        let per_tx = build(&ledger, None);
        assert_eq!(report.total_gas, per_tx.total_gas);
    }
}

//! Provenance graph reconstruction and queries.
//!
//! Two reconstruction routes exist on purpose: [`build_full`] scans every
//! log and is the reference method; [`build_ancestry`] and [`descendants`]
//! walk the graph through topic-filtered log queries only, the way a client
//! works against a remote chain. Property tests hold the two routes equal.

use crate::contract::abi::Call;
use crate::contract::events::{
    ContractEvent, CHILD_OF_SIG, FORMER_MAINTAINER_SIG, GRANT_ACCESS_SIG, PARENT_OF_SIG,
    REGISTER_SIG,
};
use crate::ledger::{Ledger, LogFilter};
use crate::types::{AccountAddress, AssetId, Topic};
use serde::Serialize;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProvenanceError {
    #[error("asset {0} is not registered")]
    UnknownAsset(AssetId),
    #[error("inconsistent logs: {0}")]
    InconsistentLogs(String),
}

/// Asset kind as declared in metadata; drives export styling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssetType {
    Dataset,
    Operation,
    Model,
    Other,
}

impl AssetType {
    fn parse(value: Option<&str>) -> Self {
        match value {
            Some("dataset") => AssetType::Dataset,
            Some("operation") => AssetType::Operation,
            Some("model") => AssetType::Model,
            _ => AssetType::Other,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            AssetType::Dataset => "dataset",
            AssetType::Operation => "operation",
            AssetType::Model => "model",
            AssetType::Other => "other",
        }
    }

    fn dot_shape(&self) -> &'static str {
        match self {
            AssetType::Dataset => "box",
            AssetType::Operation => "ellipse",
            AssetType::Model => "diamond",
            AssetType::Other => "plaintext",
        }
    }
}

/// One registered asset, reconstructed from its events.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetNode {
    pub asset_id: AssetId,
    /// Parsed content of the Register event, byte-exact source.
    pub metadata: Value,
    pub registered_block: u64,
    /// Registering account first, then one entry per ownership change.
    pub maintainer_history: Vec<AccountAddress>,
}

impl AssetNode {
    pub fn name(&self) -> String {
        self.metadata
            .get("name")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| self.asset_id.to_hex()[..8].to_string())
    }

    pub fn asset_type(&self) -> AssetType {
        AssetType::parse(self.metadata.get("asset_type").and_then(Value::as_str))
    }

    pub fn maintainer(&self) -> AccountAddress {
        *self
            .maintainer_history
            .last()
            .expect("history starts with the registering account")
    }
}

/// DAG of assets; edges point parent to child.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProvenanceGraph {
    pub nodes: BTreeMap<AssetId, AssetNode>,
    pub edges: BTreeSet<(AssetId, AssetId)>,
}

impl ProvenanceGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Everything `id` transitively descends from, plus `id` itself.
    /// Computed on the in-memory edge set.
    pub fn ancestor_closure(&self, id: &AssetId) -> BTreeSet<AssetId> {
        let mut parents_of: BTreeMap<&AssetId, Vec<&AssetId>> = BTreeMap::new();
        for (parent, child) in &self.edges {
            parents_of.entry(child).or_default().push(parent);
        }
        let mut seen = BTreeSet::from([*id]);
        let mut queue = VecDeque::from([id]);
        while let Some(current) = queue.pop_front() {
            for parent in parents_of.get(current).into_iter().flatten() {
                if seen.insert(**parent) {
                    queue.push_back(parent);
                }
            }
        }
        seen
    }

    /// Everything transitively derived from `id`, excluding `id` itself.
    pub fn descendant_closure(&self, id: &AssetId) -> BTreeSet<AssetId> {
        let mut children_of: BTreeMap<&AssetId, Vec<&AssetId>> = BTreeMap::new();
        for (parent, child) in &self.edges {
            children_of.entry(parent).or_default().push(child);
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([id]);
        while let Some(current) = queue.pop_front() {
            for child in children_of.get(current).into_iter().flatten() {
                if seen.insert(**child) {
                    queue.push_back(child);
                }
            }
        }
        seen
    }

    /// Independent cycle detection (Kahn's algorithm). The contract makes
    /// cycles unconstructable; this re-checks that from the graph alone.
    pub fn has_cycle(&self) -> bool {
        let mut indegree: BTreeMap<&AssetId, usize> =
            self.nodes.keys().map(|id| (id, 0)).collect();
        for (_, child) in &self.edges {
            if let Some(d) = indegree.get_mut(child) {
                *d += 1;
            }
        }
        let mut queue: VecDeque<&AssetId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut visited = 0usize;
        while let Some(current) = queue.pop_front() {
            visited += 1;
            for (parent, child) in &self.edges {
                if parent == current {
                    let d = indegree.get_mut(child).expect("edge endpoints are nodes");
                    *d -= 1;
                    if *d == 0 {
                        queue.push_back(child);
                    }
                }
            }
        }
        visited != self.nodes.len()
    }
}

fn transfer_new_maintainer(
    ledger: &Ledger,
    block_number: u64,
    tx_index: u32,
) -> Result<AccountAddress, ProvenanceError> {
    let tx = ledger.transaction(block_number, tx_index).ok_or_else(|| {
        ProvenanceError::InconsistentLogs(format!(
            "log points to missing transaction at block {block_number}"
        ))
    })?;
    match Call::decode(&tx.function, &tx.args) {
        Ok(Call::Transfer { new_maintainer, .. }) => Ok(new_maintainer),
        _ => Err(ProvenanceError::InconsistentLogs(
            "FormerMaintainer log not backed by a transfer call".into(),
        )),
    }
}

fn register_sender(
    ledger: &Ledger,
    block_number: u64,
    tx_index: u32,
) -> Result<AccountAddress, ProvenanceError> {
    ledger
        .transaction(block_number, tx_index)
        .map(|tx| tx.sender)
        .ok_or_else(|| {
            ProvenanceError::InconsistentLogs(format!(
                "log points to missing transaction at block {block_number}"
            ))
        })
}

/// Reference reconstruction: one pass over every contract log.
pub fn build_full(ledger: &Ledger) -> Result<ProvenanceGraph, ProvenanceError> {
    let mut graph = ProvenanceGraph::default();
    let mut child_of_edges: BTreeSet<(AssetId, AssetId)> = BTreeSet::new();
    for log in ledger.get_logs(&LogFilter::default()) {
        let Some(event) = ContractEvent::from_log(&log) else {
            continue;
        };
        match event {
            ContractEvent::Register { asset_id, metadata } => {
                let parsed: Value = serde_json::from_slice(&metadata).map_err(|e| {
                    ProvenanceError::InconsistentLogs(format!(
                        "unparseable metadata for {asset_id}: {e}"
                    ))
                })?;
                let registrant = register_sender(ledger, log.block_number, log.tx_index)?;
                graph.nodes.insert(
                    asset_id,
                    AssetNode {
                        asset_id,
                        metadata: parsed,
                        registered_block: log.block_number,
                        maintainer_history: vec![registrant],
                    },
                );
            }
            ContractEvent::FormerMaintainer {
                asset_id,
                previous_maintainer,
            } => {
                let new_maintainer =
                    transfer_new_maintainer(ledger, log.block_number, log.tx_index)?;
                let node = graph.nodes.get_mut(&asset_id).ok_or_else(|| {
                    ProvenanceError::InconsistentLogs(format!(
                        "ownership change for unregistered asset {asset_id}"
                    ))
                })?;
                if node.maintainer() != previous_maintainer {
                    return Err(ProvenanceError::InconsistentLogs(format!(
                        "FormerMaintainer for {asset_id} disagrees with history"
                    )));
                }
                node.maintainer_history.push(new_maintainer);
            }
            ContractEvent::ParentOf {
                asset_id,
                parent_id,
            } => {
                graph.edges.insert((parent_id, asset_id));
            }
            ContractEvent::ChildOf { asset_id, child_id } => {
                child_of_edges.insert((asset_id, child_id));
            }
            _ => {}
        }
    }
    if graph.edges != child_of_edges {
        return Err(ProvenanceError::InconsistentLogs(
            "ParentOf and ChildOf logs are not mirror images".into(),
        ));
    }
    for (parent, child) in &graph.edges {
        if !graph.nodes.contains_key(parent) || !graph.nodes.contains_key(child) {
            return Err(ProvenanceError::InconsistentLogs(format!(
                "edge {parent} -> {child} references an unregistered asset"
            )));
        }
    }
    Ok(graph)
}

fn require_registered(ledger: &Ledger, asset_id: &AssetId) -> Result<(), ProvenanceError> {
    if ledger.state().is_registered(asset_id) {
        Ok(())
    } else {
        Err(ProvenanceError::UnknownAsset(*asset_id))
    }
}

/// Load one node through topic-filtered queries.
fn fetch_node(ledger: &Ledger, asset_id: &AssetId) -> Result<AssetNode, ProvenanceError> {
    let topic1 = Topic::from_asset_id(asset_id);
    let register = ledger
        .get_logs(&LogFilter::event(REGISTER_SIG).with_topic1(topic1))
        .into_iter()
        .next()
        .ok_or(ProvenanceError::UnknownAsset(*asset_id))?;
    let Some(ContractEvent::Register { metadata, .. }) = ContractEvent::from_log(&register)
    else {
        return Err(ProvenanceError::InconsistentLogs(format!(
            "malformed Register log for {asset_id}"
        )));
    };
    let parsed: Value = serde_json::from_slice(&metadata).map_err(|e| {
        ProvenanceError::InconsistentLogs(format!("unparseable metadata for {asset_id}: {e}"))
    })?;
    let mut history = vec![register_sender(ledger, register.block_number, register.tx_index)?];
    for log in ledger.get_logs(&LogFilter::event(FORMER_MAINTAINER_SIG).with_topic1(topic1)) {
        history.push(transfer_new_maintainer(ledger, log.block_number, log.tx_index)?);
    }
    Ok(AssetNode {
        asset_id: *asset_id,
        metadata: parsed,
        registered_block: register.block_number,
        maintainer_history: history,
    })
}

/// Ancestor subgraph of an asset (the asset included), retrieved by walking
/// ParentOf events recursively with topic filters; never a full scan.
/// Breadth-first with a visited set, so shared ancestors are fetched once.
pub fn build_ancestry(
    ledger: &Ledger,
    asset_id: &AssetId,
) -> Result<ProvenanceGraph, ProvenanceError> {
    require_registered(ledger, asset_id)?;
    let mut graph = ProvenanceGraph::default();
    let mut queue = VecDeque::from([*asset_id]);
    let mut visited = BTreeSet::from([*asset_id]);
    while let Some(current) = queue.pop_front() {
        graph.nodes.insert(current, fetch_node(ledger, &current)?);
        let filter =
            LogFilter::event(PARENT_OF_SIG).with_topic1(Topic::from_asset_id(&current));
        for log in ledger.get_logs(&filter) {
            let Some(ContractEvent::ParentOf { parent_id, .. }) = ContractEvent::from_log(&log)
            else {
                return Err(ProvenanceError::InconsistentLogs(format!(
                    "malformed ParentOf log for {current}"
                )));
            };
            graph.edges.insert((parent_id, current));
            if visited.insert(parent_id) {
                queue.push_back(parent_id);
            }
        }
    }
    Ok(graph)
}

/// Transitive usages of an asset, retrieved by walking ChildOf events with
/// topic filters.
pub fn descendants(
    ledger: &Ledger,
    asset_id: &AssetId,
) -> Result<BTreeSet<AssetId>, ProvenanceError> {
    require_registered(ledger, asset_id)?;
    let mut found = BTreeSet::new();
    let mut queue = VecDeque::from([*asset_id]);
    while let Some(current) = queue.pop_front() {
        let filter = LogFilter::event(CHILD_OF_SIG).with_topic1(Topic::from_asset_id(&current));
        for log in ledger.get_logs(&filter) {
            let Some(ContractEvent::ChildOf { child_id, .. }) = ContractEvent::from_log(&log)
            else {
                return Err(ProvenanceError::InconsistentLogs(format!(
                    "malformed ChildOf log for {current}"
                )));
            };
            if found.insert(child_id) {
                queue.push_back(child_id);
            }
        }
    }
    Ok(found)
}

/// Accounts granted access to an asset, one entry per GrantAccess log in
/// chain order.
pub fn accessors(
    ledger: &Ledger,
    asset_id: &AssetId,
) -> Result<Vec<(AccountAddress, u64)>, ProvenanceError> {
    require_registered(ledger, asset_id)?;
    let filter = LogFilter::event(GRANT_ACCESS_SIG).with_topic1(Topic::from_asset_id(asset_id));
    Ok(ledger
        .get_logs(&filter)
        .into_iter()
        .filter_map(|log| {
            ContractEvent::from_log(&log).map(|event| match event {
                ContractEvent::GrantAccess { accessor, .. } => (accessor, log.block_number),
                _ => unreachable!("filtered by GrantAccess topic0"),
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

#[derive(Serialize)]
struct ExportNode {
    id: String,
    name: String,
    asset_type: String,
    maintainer: String,
}

#[derive(Serialize)]
struct ExportEdge {
    parent: String,
    child: String,
}

#[derive(Serialize)]
struct ExportGraph {
    nodes: Vec<ExportNode>,
    edges: Vec<ExportEdge>,
}

/// Deterministic export: nodes and edges sorted by asset id.
pub fn export(graph: &ProvenanceGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => {
            let out = ExportGraph {
                nodes: graph
                    .nodes
                    .values()
                    .map(|node| ExportNode {
                        id: node.asset_id.to_hex(),
                        name: node.name(),
                        asset_type: node.asset_type().as_str().to_string(),
                        maintainer: node.maintainer().to_hex(),
                    })
                    .collect(),
                edges: graph
                    .edges
                    .iter()
                    .map(|(parent, child)| ExportEdge {
                        parent: parent.to_hex(),
                        child: child.to_hex(),
                    })
                    .collect(),
            };
            let mut text =
                serde_json::to_string_pretty(&out).expect("export structs always serialize");
            text.push('\n');
            text
        }
        ExportFormat::Dot => {
            let mut out = String::from("digraph provenance {\n");
            for node in graph.nodes.values() {
                writeln!(
                    out,
                    "  \"{}\" [label=\"{}\", shape={}];",
                    node.asset_id.to_hex(),
                    node.name().replace('"', "\\\""),
                    node.asset_type().dot_shape()
                )
                .expect("writing to a String cannot fail");
            }
            for (parent, child) in &graph.edges {
                writeln!(out, "  \"{}\" -> \"{}\";", parent.to_hex(), child.to_hex())
                    .expect("writing to a String cannot fail");
            }
            out.push_str("}\n");
            out
        }
    }
}

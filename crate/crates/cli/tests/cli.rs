//! End-to-end tests of the `aiprov` binary: command wiring, exit codes and
//! the thin-adapter rule (the CLI must behave exactly like the library).

use aiprov_cli::config::Config;
use aiprov_core::client::keystore::Keystore;
use aiprov_core::client::ActorContext;
use aiprov_core::exchange::compute_asset_id;
use aiprov_core::ledger::persist;
use aiprov_core::{AccountInfo, FileStore, GasSchedule, Ledger};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_aiprov")
}

fn run_in(config: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output) -> String {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

struct Setup {
    _dir: tempfile::TempDir,
    config: PathBuf,
}

fn init_workspace() -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("aiprov.json");
    let output = run_in(&config, &["init"]);
    assert_ok(&output);
    Setup { _dir: dir, config }
}

#[test]
fn init_refuses_to_overwrite_without_force() {
    let setup = init_workspace();
    let output = run_in(&setup.config, &["init"]);
    assert_eq!(output.status.code(), Some(1));
    let output = run_in(&setup.config, &["init", "--force"]);
    assert_ok(&output);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let setup = init_workspace();
    let output = run_in(&setup.config, &["definitely-not-a-command"]);
    assert_eq!(output.status.code(), Some(2));
    let output = run_in(&setup.config, &["register"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn register_trace_and_fetch_flow() {
    let setup = init_workspace();
    let dir = setup.config.parent().unwrap();

    let address = assert_ok(&run_in(&setup.config, &["account", "new", "alice"]));
    assert_eq!(address.trim().len(), 40);

    let payload_path = dir.join("data.csv");
    std::fs::write(&payload_path, b"h,v\n1,2\n").unwrap();
    let metadata_path = dir.join("meta.json");
    std::fs::write(
        &metadata_path,
        br#"{"name":"demo data","asset_type":"dataset"}"#,
    )
    .unwrap();

    let asset_id = assert_ok(&run_in(
        &setup.config,
        &[
            "register",
            "--payload",
            payload_path.to_str().unwrap(),
            "--metadata",
            metadata_path.to_str().unwrap(),
        ],
    ));
    let asset_id = asset_id.trim().to_string();
    assert_eq!(
        asset_id,
        compute_asset_id(b"h,v\n1,2\n").to_hex(),
        "printed id is the payload hash"
    );

    // ancestry trace of a single asset
    let dot = assert_ok(&run_in(&setup.config, &["trace", &asset_id]));
    assert!(dot.contains("demo data"));
    assert_eq!(dot.matches("->").count(), 0);

    // unknown asset is a protocol error
    let missing = "ab".repeat(32);
    let output = run_in(&setup.config, &["trace", &missing]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("UnknownAsset"));

    // the maintainer holds the AEK, so a self-fetch needs no grant
    let out_path = dir.join("fetched.bin");
    assert_ok(&run_in(
        &setup.config,
        &["fetch", &asset_id, "--out", out_path.to_str().unwrap()],
    ));
    assert_eq!(std::fs::read(&out_path).unwrap(), b"h,v\n1,2\n");
}

#[test]
fn fetch_without_grant_reports_not_granted() {
    let setup = init_workspace();
    let dir = setup.config.parent().unwrap().to_path_buf();

    assert_ok(&run_in(&setup.config, &["account", "new", "owner"]));
    let payload = dir.join("p.bin");
    std::fs::write(&payload, b"payload").unwrap();
    let metadata = dir.join("m.json");
    std::fs::write(&metadata, br#"{"name":"p","asset_type":"model"}"#).unwrap();
    let asset_id = assert_ok(&run_in(
        &setup.config,
        &[
            "register",
            "--payload",
            payload.to_str().unwrap(),
            "--metadata",
            metadata.to_str().unwrap(),
        ],
    ));
    let asset_id = asset_id.trim().to_string();

    // a second actor shares the chain and store but not the keystore
    let mut other = Config::load(&setup.config).unwrap();
    other.account = Some("intruder".into());
    other.keystore_path = dir.join("intruder-keys.json");
    let other_config = dir.join("intruder.json");
    other.save(&other_config).unwrap();
    assert_ok(&run_in(&other_config, &["account", "new", "intruder"]));

    let output = run_in(&other_config, &["fetch", &asset_id]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("NotGranted"));
}

#[test]
fn request_grant_fetch_between_two_accounts() {
    let setup = init_workspace();
    let dir = setup.config.parent().unwrap().to_path_buf();

    assert_ok(&run_in(&setup.config, &["account", "new", "owner"]));
    let payload = dir.join("p.bin");
    std::fs::write(&payload, b"shared payload").unwrap();
    let metadata = dir.join("m.json");
    std::fs::write(&metadata, br#"{"name":"p","asset_type":"dataset"}"#).unwrap();
    let asset_id = assert_ok(&run_in(
        &setup.config,
        &[
            "register",
            "--payload",
            payload.to_str().unwrap(),
            "--metadata",
            metadata.to_str().unwrap(),
        ],
    ));
    let asset_id = asset_id.trim().to_string();

    let mut reader_config = Config::load(&setup.config).unwrap();
    reader_config.account = Some("reader".into());
    reader_config.keystore_path = dir.join("reader-keys.json");
    let reader_config_path = dir.join("reader.json");
    reader_config.save(&reader_config_path).unwrap();
    assert_ok(&run_in(&reader_config_path, &["account", "new", "reader"]));

    assert_ok(&run_in(&reader_config_path, &["request", &asset_id]));

    let pending = assert_ok(&run_in(&setup.config, &["pending"]));
    assert!(pending.contains(&asset_id));

    assert_ok(&run_in(&setup.config, &["grant", &asset_id, "reader"]));

    let accessors = assert_ok(&run_in(&setup.config, &["accessors", &asset_id]));
    assert_eq!(accessors.lines().count(), 1);

    let out_path = dir.join("fetched.bin");
    assert_ok(&run_in(
        &reader_config_path,
        &["fetch", &asset_id, "--out", out_path.to_str().unwrap()],
    ));
    assert_eq!(std::fs::read(&out_path).unwrap(), b"shared payload");
}

/// The CLI is a thin adapter: the same flow through the library API yields
/// the same asset id, the same gas and the same event sequence.
#[test]
fn cli_and_library_flows_are_equivalent() {
    let payload: &[u8] = b"adapter check payload";
    let metadata = r#"{"name":"adapter","asset_type":"dataset"}"#;

    // CLI route
    let setup = init_workspace();
    let dir = setup.config.parent().unwrap().to_path_buf();
    assert_ok(&run_in(&setup.config, &["account", "new", "alice"]));
    let payload_path = dir.join("p.bin");
    std::fs::write(&payload_path, payload).unwrap();
    let metadata_path = dir.join("m.json");
    std::fs::write(&metadata_path, metadata).unwrap();
    let cli_asset = assert_ok(&run_in(
        &setup.config,
        &[
            "register",
            "--payload",
            payload_path.to_str().unwrap(),
            "--metadata",
            metadata_path.to_str().unwrap(),
        ],
    ))
    .trim()
    .to_string();
    let config = Config::load(&setup.config).unwrap();
    let cli_ledger = persist::load_chain(&config.chain_path, config.effective_schedule()).unwrap();

    // library route
    let lib_dir = tempfile::tempdir().unwrap();
    let mut ledger = Ledger::new(GasSchedule::default());
    let info = AccountInfo::new("alice", vec![7; 32]);
    let account = info.address;
    ledger.register_account(info).unwrap();
    let shared = aiprov_core::ledger::shared(ledger);
    let mut actor = ActorContext::new(
        account,
        shared.clone(),
        FileStore::new(lib_dir.path().join("store")),
        Keystore::open(lib_dir.path().join("keys.json")).unwrap(),
    );
    let lib_asset = actor.register_asset(payload, metadata, &[]).unwrap();

    assert_eq!(cli_asset, lib_asset.to_hex());

    let lib_ledger = shared.read().unwrap();
    let gas = |ledger: &Ledger| -> Vec<u64> {
        ledger
            .blocks()
            .iter()
            .flat_map(|b| b.receipts.iter().map(|r| r.gas_used))
            .collect()
    };
    assert_eq!(gas(&cli_ledger), gas(&lib_ledger));

    let signatures = |ledger: &Ledger| -> Vec<Vec<aiprov_core::Topic>> {
        ledger
            .get_logs(&aiprov_core::LogFilter::default())
            .iter()
            .map(|log| log.topics.clone())
            .collect()
    };
    assert_eq!(signatures(&cli_ledger), signatures(&lib_ledger));
}

#[test]
fn environment_variables_override_the_config() {
    let setup = init_workspace();
    assert_ok(&run_in(&setup.config, &["account", "new", "alice"]));
    // the env account takes precedence over the configured one
    let output = Command::new(bin())
        .arg("--config")
        .arg(&setup.config)
        .arg("pending")
        .env("AIPROV_ACCOUNT", "nobody")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("UnknownAccount"));

    let output = Command::new(bin())
        .arg("--config")
        .arg(&setup.config)
        .arg("gas-report")
        .env("AIPROV_CHAIN_PATH", "/nonexistent/chain.jsonl")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn gas_report_without_scenario_lists_transactions() {
    let setup = init_workspace();
    let dir = setup.config.parent().unwrap().to_path_buf();
    assert_ok(&run_in(&setup.config, &["account", "new", "alice"]));
    let payload = dir.join("p.bin");
    std::fs::write(&payload, b"x").unwrap();
    let metadata = dir.join("m.json");
    std::fs::write(&metadata, br#"{"name":"x","asset_type":"model"}"#).unwrap();
    assert_ok(&run_in(
        &setup.config,
        &[
            "register",
            "--payload",
            payload.to_str().unwrap(),
            "--metadata",
            metadata.to_str().unwrap(),
        ],
    ));
    let report = assert_ok(&run_in(&setup.config, &["gas-report"]));
    assert!(report.contains("addAsset"));
    assert!(report.contains("Total"));
}

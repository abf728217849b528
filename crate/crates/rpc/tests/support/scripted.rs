//! Scripted ledger state and request list behind the frozen wire fixtures.
//! Shared by the rpc golden test and the acceptance suite.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use xnogate_core::{AccountAddress, BlockHash, ManualClock, RawAmount, SimLedger};
use xnogate_rpc::MockNode;

pub struct Scripted {
    pub node: MockNode,
    pub a: AccountAddress,
    pub b: AccountAddress,
    pub send: BlockHash,
    pub change: BlockHash,
}

/// A: mint 100, send 40 to B, rep -> R0, rep -> R1 (unconfirmed). B: receive 40.
pub fn scripted() -> Scripted {
    let clock = Arc::new(ManualClock::at_unix(1_700_000_000));
    let ledger = Arc::new(SimLedger::with_clock(clock.clone()));
    let a = AccountAddress::from_public_key([0x11; 32]);
    let b = AccountAddress::from_public_key([0x22; 32]);
    let r0 = AccountAddress::from_public_key([0x33; 32]);
    let r1 = AccountAddress::from_public_key([0x44; 32]);
    ledger.mint(&a, RawAmount::new(100)).unwrap();
    clock.advance_secs(10);
    let send = ledger.send(&a, &b, RawAmount::new(40)).unwrap();
    clock.advance_secs(10);
    ledger.receive(&b, &send).unwrap();
    let change = ledger.change_representative(&a, &r0).unwrap();
    clock.advance_secs(10);
    ledger.set_confirmation_delay(None);
    ledger.change_representative(&a, &r1).unwrap();
    Scripted {
        node: MockNode::new(ledger, false),
        a,
        b,
        send,
        change,
    }
}

pub fn cases(s: &Scripted) -> Vec<(&'static str, String)> {
    let unopened = AccountAddress::from_public_key([0x55; 32]);
    vec![
        (
            "account_info",
            format!(
                r#"{{"action":"account_info","account":"{}","representative":"true"}}"#,
                s.a
            ),
        ),
        (
            "account_info_no_rep",
            format!(r#"{{"action":"account_info","account":"{}"}}"#, s.a),
        ),
        (
            "account_info_unopened",
            format!(
                r#"{{"action":"account_info","account":"{unopened}","representative":"true"}}"#
            ),
        ),
        (
            "account_info_bad_account",
            r#"{"action":"account_info","account":"nano_bad","representative":"true"}"#.to_string(),
        ),
        (
            "account_history",
            format!(
                r#"{{"action":"account_history","account":"{}","count":"10"}}"#,
                s.a
            ),
        ),
        (
            "account_history_page",
            format!(
                r#"{{"action":"account_history","account":"{}","count":"1"}}"#,
                s.a
            ),
        ),
        (
            "account_history_head",
            format!(
                r#"{{"action":"account_history","account":"{}","count":"2","head":"{}"}}"#,
                s.a, s.send
            ),
        ),
        (
            "account_history_receiver",
            format!(
                r#"{{"action":"account_history","account":"{}","count":"10"}}"#,
                s.b
            ),
        ),
        (
            "account_history_unopened",
            format!(r#"{{"action":"account_history","account":"{unopened}","count":"10"}}"#),
        ),
        (
            "block_info_send",
            format!(
                r#"{{"action":"block_info","json_block":"true","hash":"{}"}}"#,
                s.send
            ),
        ),
        (
            "block_info_change",
            format!(
                r#"{{"action":"block_info","json_block":"true","hash":"{}"}}"#,
                s.change
            ),
        ),
        (
            "block_info_missing",
            format!(
                r#"{{"action":"block_info","json_block":"true","hash":"{}"}}"#,
                "AB".repeat(32)
            ),
        ),
        (
            "unknown_command",
            r#"{"action":"wallet_create"}"#.to_string(),
        ),
        (
            "admin_disabled",
            format!(
                r#"{{"action":"sim_mint","account":"{}","amount":"1"}}"#,
                s.a
            ),
        ),
    ]
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../rpc/tests/golden")
}

/// Compares every response with its fixture; returns the names that differ.
/// With `update`, rewrites the fixtures first.
pub fn check_all(update: bool) -> Result<usize, Vec<String>> {
    let s = scripted();
    let mut mismatched = vec![];
    let all = cases(&s);
    for (name, request) in &all {
        let actual = s.node.handle(request.as_bytes());
        let path = golden_dir().join(format!("{name}.json"));
        if update {
            std::fs::write(&path, format!("{actual}\n")).unwrap();
        }
        match std::fs::read_to_string(&path) {
            Ok(expected) if expected.trim_end_matches('\n') == actual => {}
            _ => mismatched.push(name.to_string()),
        }
    }
    if mismatched.is_empty() {
        Ok(all.len())
    } else {
        Err(mismatched)
    }
}

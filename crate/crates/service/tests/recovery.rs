mod common;

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use xnogate_core::{BlockHash, ConsumedHashStore, ManualClock, NodeReader, RawAmount, SimLedger};
use xnogate_service::persist::{CONSUMED_FILE, SESSIONS_FILE};
use xnogate_service::{recover_from_log, GateService, StartupError};

#[tokio::test]
async fn consumed_hash_survives_restart() {
    let mut w = World::new().await;
    let payer = acct(1);
    w.fund(&payer, 10 * PRICE).await;
    // Both sessions snapshot the payer below the coming payment.
    let s1 = w.create(&payer).await;
    let s2 = w.create(&payer).await;
    w.prove(&payer, &s1).await;
    w.prove(&payer, &s2).await;
    w.pay(&payer, PRICE).await;
    assert_eq!(w.verify_payment(&s1).await.0, 200);

    w.restart().await;
    let id1 = s1["session_id"].as_str().unwrap();
    let (status, view) = w.get(&format!("/v1/sessions/{id1}")).await;
    assert_eq!((status, view["state"].as_str()), (200, Some("granted")));
    let (status, body) = w.verify_payment(&s2).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (402, Some("payment_not_found"))
    );

    w.pay(&payer, PRICE).await;
    assert_eq!(w.verify_payment(&s2).await.0, 200);
}

#[tokio::test]
async fn open_sessions_keep_their_deadlines() {
    let mut w = World::new().await;
    let payer = acct(2);
    w.fund(&payer, 10 * PRICE).await;
    let s = w.create(&payer).await;
    w.prove(&payer, &s).await;
    w.restart().await;
    let id = s["session_id"].as_str().unwrap();
    let (_, view) = w.get(&format!("/v1/sessions/{id}")).await;
    assert_eq!(view["state"], "awaiting_payment");
    assert_eq!(view["expires_at"], s["expires_at"]);
    w.pay(&payer, PRICE).await;
    assert_eq!(w.verify_payment(&s).await.0, 200);
}

#[tokio::test]
async fn torn_tail_is_ignored_on_restart() {
    let mut w = World::new().await;
    let payer = acct(3);
    w.fund(&payer, PRICE).await;
    let s = w.create(&payer).await;
    w.gate.stop_in_place().await;
    for file in [SESSIONS_FILE, CONSUMED_FILE] {
        let mut f = std::fs::OpenOptions::new()
            .append(true)
            .open(w.dir.path().join(file))
            .unwrap();
        f.write_all(b"{\"event\":\"gran").unwrap();
    }
    w.restart().await;
    let id = s["session_id"].as_str().unwrap();
    assert_eq!(
        w.get(&format!("/v1/sessions/{id}")).await.1["state"],
        "awaiting_ownership"
    );
}

#[tokio::test]
async fn corrupt_line_refuses_to_start() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(SESSIONS_FILE), "garbage\n{}\n").unwrap();
    let ledger = Arc::new(SimLedger::new());
    let result = GateService::open(
        &config(dir.path(), "http://127.0.0.1:9/"),
        ledger,
        Arc::new(ManualClock::at_unix(START)),
    );
    match result {
        Err(StartupError::Recovery(e)) => assert!(e.to_string().contains("line 1"), "{e}"),
        other => panic!("expected recovery failure, got {:?}", other.err()),
    }
}

#[test]
fn durable_store_race_has_one_winner() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(recover_from_log(dir.path()).unwrap().store);
    let hash = BlockHash::from_bytes([9; 32]);
    let wins = Arc::new(AtomicUsize::new(0));
    let threads: Vec<_> = (0..64)
        .map(|_| {
            let (store, wins) = (store.clone(), wins.clone());
            std::thread::spawn(move || {
                if store.consume(&hash).unwrap() {
                    wins.fetch_add(1, Ordering::SeqCst);
                }
            })
        })
        .collect();
    for t in threads {
        t.join().unwrap();
    }
    assert_eq!(wins.load(Ordering::SeqCst), 1);
    drop(store);
    let text = std::fs::read_to_string(dir.path().join(CONSUMED_FILE)).unwrap();
    assert_eq!(text.lines().count(), 1);
}

/// Random flows through an in-process gate, then a reopen from the same
/// directory must reproduce sessions and consumed hashes exactly.
#[tokio::test]
async fn replay_reproduces_state() {
    let mut granted = 0;
    for seed in 0..10u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let dir = tempfile::tempdir().unwrap();
        let ledger = Arc::new(SimLedger::new());
        let clock = Arc::new(ManualClock::at_unix(START));
        let node: Arc<dyn NodeReader> = ledger.clone();
        let cfg = config(dir.path(), "http://unused/");
        let payers: Vec<_> = (1..=4).map(acct).collect();
        for p in &payers {
            ledger.mint(p, RawAmount::new(100 * PRICE)).unwrap();
        }

        let service = GateService::open(&cfg, node.clone(), clock.clone()).unwrap();
        let gate = service.gate().clone();
        let mut ids = vec![];
        for _ in 0..40 {
            let p = payers[rng.gen_range(0..payers.len())];
            match rng.gen_range(0..6) {
                0 => {
                    if let Ok(s) = gate.create_session(&p.to_string(), clock.now()).await {
                        ids.push((s.id, p, s.challenge_representative));
                    }
                }
                1 if !ids.is_empty() => {
                    let (id, payer, rep) = ids[rng.gen_range(0..ids.len())];
                    ledger.change_representative(&payer, &rep).unwrap();
                    let _ = gate.verify_ownership(&id, clock.now()).await;
                }
                2 => {
                    let amount = if rng.gen_bool(0.8) { PRICE } else { PRICE - 1 };
                    ledger.send(&p, &deposit(), RawAmount::new(amount)).unwrap();
                }
                3 if !ids.is_empty() => {
                    let (id, ..) = ids[rng.gen_range(0..ids.len())];
                    let _ = gate.verify_payment(&id, clock.now()).await;
                }
                4 => clock.advance_secs(rng.gen_range(0..300)),
                _ => {
                    let _ = gate.expire_sessions(clock.now()).await;
                }
            }
        }
        let before = (gate.snapshot().await, gate.store().snapshot());
        granted += before.1.len();
        drop(gate);
        drop(service);

        let reopened = GateService::open(&cfg, node, clock.clone()).unwrap();
        let after = (
            reopened.gate().snapshot().await,
            reopened.gate().store().snapshot(),
        );
        assert_eq!(before, after, "seed {seed}");
        assert_eq!(reopened.recovery().sessions, before.0.len());
    }
    assert!(granted > 0, "no run reached a grant");
}

trait Now {
    fn now(&self) -> u64;
}

impl Now for ManualClock {
    fn now(&self) -> u64 {
        xnogate_core::Clock::now_unix(self)
    }
}

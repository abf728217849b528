//! Random operation orders against the session engine.

mod common;

use std::collections::HashMap;

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use xnogate_core::{ConsumedHashStore, GateError, SessionId, SessionState};

async fn fuzz(seed: u64, steps: usize) {
    let mut rng = StdRng::seed_from_u64(seed);
    let w = world();
    let payers: Vec<_> = (1..=4u8).map(acct).collect();
    for p in &payers {
        w.ledger.mint(p, raw(1_000 * PRICE)).unwrap();
    }
    let mut now = 1_000_000u64;
    let mut ids: Vec<SessionId> = vec![];
    let mut last_state: HashMap<SessionId, SessionState> = HashMap::new();
    let mut tokens = 0usize;

    for _ in 0..steps {
        let payer = payers[rng.gen_range(0..payers.len())];
        let pick = |rng: &mut StdRng| (!ids.is_empty()).then(|| ids[rng.gen_range(0..ids.len())]);
        match rng.gen_range(0..9) {
            0 => match w.gate.create_session(&payer.to_string(), now).await {
                Ok(s) => ids.push(s.id),
                Err(e) => assert_eq!(e, GateError::TooManyOpenSessions),
            },
            1 | 2 => {
                if let Some(id) = pick(&mut rng) {
                    let s = w.gate.session(&id).await.unwrap();
                    let rep = if rng.gen_bool(0.8) {
                        s.challenge_representative
                    } else {
                        acct(99)
                    };
                    w.ledger.change_representative(&s.payer, &rep).unwrap();
                }
            }
            3 => {
                if let Some(id) = pick(&mut rng) {
                    let _ = w.gate.verify_ownership(&id, now).await;
                }
            }
            4 => {
                let amount = match rng.gen_range(0..3) {
                    0 => PRICE - 1,
                    1 => PRICE,
                    _ => PRICE * 2,
                };
                let to = if rng.gen_bool(0.8) {
                    deposit()
                } else {
                    acct(98)
                };
                w.ledger.send(&payer, &to, raw(amount)).unwrap();
            }
            5 | 6 => {
                if let Some(id) = pick(&mut rng) {
                    if w.gate.verify_payment(&id, now).await.is_ok() {
                        tokens += 1;
                    }
                }
            }
            7 => now += rng.gen_range(0..400),
            _ => {
                w.gate.expire_sessions(now).await.unwrap();
            }
        }

        for s in w.gate.snapshot().await {
            let before = last_state
                .insert(s.id, s.state)
                .unwrap_or(SessionState::AwaitingOwnership);
            assert!(
                before == s.state || before.can_move_to(s.state),
                "{before:?} -> {:?}",
                s.state
            );
            assert_eq!(
                s.consumed_send_hash.is_some(),
                s.state == SessionState::Granted
            );
            assert_eq!(s.token.is_some(), s.state == SessionState::Granted);
            if let Some(h) = s.consumed_send_hash {
                let block = w.ledger.block(&h).unwrap();
                assert!(block.height > s.frontier_height_at_creation);
                assert_eq!(block.account, s.payer);
                assert!(block.amount >= s.price);
            }
        }
    }
    let granted = w
        .gate
        .snapshot()
        .await
        .iter()
        .filter(|s| s.state == SessionState::Granted)
        .count();
    assert_eq!(granted, tokens);
    assert_eq!(w.store.snapshot().len(), tokens);
}

#[tokio::test]
async fn random_operation_orders_respect_the_state_machine() {
    for seed in 0..20 {
        fuzz(seed, 400).await;
    }
}

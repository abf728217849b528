//! The pay-to-pass session engine.
//!
//! A session walks `awaiting_ownership -> awaiting_payment -> granted`:
//!
//! 1. the payer submits an address, which must decode and belong to an opened
//!    account; its block count is snapshotted;
//! 2. the gate derives a per-session challenge representative and waits until
//!    the node reports it as the payer's representative;
//! 3. the gate then waits for a confirmed send of at least `price` from the
//!    payer to the deposit account, above the snapshot height and not yet
//!    consumed by any other session, and issues a token for it.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::codec::{AccountAddress, AddressError, BlockHash, RawAmount};
use crate::node::{BlockKind, NodeError, NodeReader};
use crate::session::{PaymentSpec, Session, SessionId, SessionState};
use crate::store::{ConsumedHashStore, StoreError};
use crate::token::{AccessToken, TokenError, TokenPayload, TokenSigner};

#[derive(Debug, Clone)]
pub struct GateSettings {
    pub deposit_account: AccountAddress,
    pub price: RawAmount,
    pub token_secret: Vec<u8>,
    pub session_ttl_secs: u64,
    pub token_ttl_secs: u64,
    pub require_confirmation: bool,
    pub max_open_sessions_per_payer: usize,
    pub history_page_size: u32,
    pub history_max_pages: u32,
}

impl GateSettings {
    pub const DEFAULT_SESSION_TTL_SECS: u64 = 15 * 60;
    pub const DEFAULT_TOKEN_TTL_SECS: u64 = 10 * 60;

    pub fn new(deposit_account: AccountAddress, price: RawAmount, token_secret: Vec<u8>) -> Self {
        GateSettings {
            deposit_account,
            price,
            token_secret,
            session_ttl_secs: Self::DEFAULT_SESSION_TTL_SECS,
            token_ttl_secs: Self::DEFAULT_TOKEN_TTL_SECS,
            require_confirmation: true,
            max_open_sessions_per_payer: 5,
            history_page_size: 50,
            history_max_pages: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GateError {
    #[error("invalid address: {0}")]
    InvalidAddress(AddressError),
    #[error("account not found")]
    AccountNotFound,
    #[error("node unavailable: {0}")]
    NodeUnavailable(String),
    #[error("too many open sessions for this account")]
    TooManyOpenSessions,
    #[error("session not found")]
    SessionNotFound,
    #[error("session expired")]
    SessionExpired,
    #[error("operation not allowed in state {}", .0.as_str())]
    WrongState(SessionState),
    #[error("representative is {observed}, not the challenge representative")]
    RepresentativeMismatch { observed: AccountAddress },
    #[error("no qualifying payment found")]
    PaymentNotFound,
    #[error("payment below price (best: {best_amount} raw)")]
    Underpaid { best_amount: RawAmount },
    #[error("payment not confirmed yet")]
    UnconfirmedPayment,
    #[error("storage failure: {0}")]
    StorageFailure(String),
}

impl GateError {
    pub fn code(&self) -> &'static str {
        match self {
            GateError::InvalidAddress(_) => "invalid_address",
            GateError::AccountNotFound => "account_not_found",
            GateError::NodeUnavailable(_) => "node_unavailable",
            GateError::TooManyOpenSessions => "too_many_open_sessions",
            GateError::SessionNotFound => "session_not_found",
            GateError::SessionExpired => "session_expired",
            GateError::WrongState(_) => "wrong_state",
            GateError::RepresentativeMismatch { .. } => "representative_mismatch",
            GateError::PaymentNotFound => "payment_not_found",
            GateError::Underpaid { .. } => "underpaid",
            GateError::UnconfirmedPayment => "unconfirmed_payment",
            GateError::StorageFailure(_) => "storage_failure",
        }
    }
}

impl From<NodeError> for GateError {
    fn from(e: NodeError) -> Self {
        GateError::NodeUnavailable(e.to_string())
    }
}

impl From<StoreError> for GateError {
    fn from(e: StoreError) -> Self {
        GateError::StorageFailure(e.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionEvent {
    Created,
    OwnershipVerified,
    Granted,
    Expired,
    Failed,
}

/// Durable sink for session lifecycle events. A `Granted` record must be on
/// stable storage before `record` returns.
pub trait Journal: Send + Sync {
    fn record(&self, event: SessionEvent, session: &Session) -> Result<(), StoreError>;
}

#[derive(Debug, Default)]
pub struct NullJournal;

impl Journal for NullJournal {
    fn record(&self, _: SessionEvent, _: &Session) -> Result<(), StoreError> {
        Ok(())
    }
}

/// Challenge address for a session: HMAC-SHA256(secret, "rep:" ‖ id) used as a public key.
pub fn derive_challenge_representative(secret: &[u8], id: &SessionId) -> AccountAddress {
    let mut mac = Hmac::<Sha256>::new_from_slice(secret).expect("HMAC accepts any key length");
    mac.update(b"rep:");
    mac.update(id.to_string().as_bytes());
    AccountAddress::from_public_key(mac.finalize().into_bytes().into())
}

struct Slot {
    payer: AccountAddress,
    expires_at: u64,
    open: AtomicBool,
    session: tokio::sync::Mutex<Session>,
}

impl Slot {
    fn new(session: Session) -> Arc<Self> {
        Arc::new(Slot {
            payer: session.payer,
            expires_at: session.expires_at,
            open: AtomicBool::new(session.state.is_open()),
            session: tokio::sync::Mutex::new(session),
        })
    }
}

pub struct Gate {
    settings: GateSettings,
    signer: TokenSigner,
    node: Arc<dyn NodeReader>,
    store: Arc<dyn ConsumedHashStore>,
    journal: Arc<dyn Journal>,
    sessions: Mutex<HashMap<SessionId, Arc<Slot>>>,
}

impl Gate {
    pub fn new(
        settings: GateSettings,
        node: Arc<dyn NodeReader>,
        store: Arc<dyn ConsumedHashStore>,
        journal: Arc<dyn Journal>,
    ) -> Self {
        Gate {
            signer: TokenSigner::new(&settings.token_secret),
            settings,
            node,
            store,
            journal,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn settings(&self) -> &GateSettings {
        &self.settings
    }

    pub fn store(&self) -> &Arc<dyn ConsumedHashStore> {
        &self.store
    }

    /// Re-installs sessions recovered from a journal, replacing same-id entries.
    pub fn restore(&self, sessions: impl IntoIterator<Item = Session>) {
        let mut map = self.sessions.lock().unwrap();
        for s in sessions {
            map.insert(s.id, Slot::new(s));
        }
    }

    pub fn challenge_representative(&self, id: &SessionId) -> AccountAddress {
        derive_challenge_representative(&self.settings.token_secret, id)
    }

    fn slot(&self, id: &SessionId) -> Result<Arc<Slot>, GateError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or(GateError::SessionNotFound)
    }

    fn open_sessions_for(
        map: &HashMap<SessionId, Arc<Slot>>,
        payer: &AccountAddress,
        now: u64,
    ) -> usize {
        map.values()
            .filter(|s| s.payer == *payer && s.open.load(Ordering::SeqCst) && now < s.expires_at)
            .count()
    }

    /// Opens a session for `payer_text` after checking it is a valid, opened account.
    pub async fn create_session(&self, payer_text: &str, now: u64) -> Result<Session, GateError> {
        let payer = AccountAddress::decode(payer_text).map_err(GateError::InvalidAddress)?;
        {
            let map = self.sessions.lock().unwrap();
            if Self::open_sessions_for(&map, &payer, now)
                >= self.settings.max_open_sessions_per_payer
            {
                return Err(GateError::TooManyOpenSessions);
            }
        }
        let info = self
            .node
            .account_info(&payer)
            .await?
            .ok_or(GateError::AccountNotFound)?;
        if info.block_count == 0 {
            return Err(GateError::AccountNotFound);
        }

        let (id, challenge) = loop {
            let id = SessionId::random();
            let rep = self.challenge_representative(&id);
            if rep != payer && rep != self.settings.deposit_account {
                break (id, rep);
            }
        };
        let session = Session {
            id,
            payer,
            state: SessionState::AwaitingOwnership,
            challenge_representative: challenge,
            frontier_height_at_creation: info.block_count,
            price: self.settings.price,
            deposit_account: self.settings.deposit_account,
            created_at: now,
            expires_at: now + self.settings.session_ttl_secs,
            consumed_send_hash: None,
            token: None,
        };

        let mut map = self.sessions.lock().unwrap();
        if Self::open_sessions_for(&map, &payer, now) >= self.settings.max_open_sessions_per_payer {
            return Err(GateError::TooManyOpenSessions);
        }
        self.journal.record(SessionEvent::Created, &session)?;
        map.insert(id, Slot::new(session.clone()));
        Ok(session)
    }

    pub async fn session(&self, id: &SessionId) -> Result<Session, GateError> {
        let slot = self.slot(id)?;
        let session = slot.session.lock().await;
        Ok(session.clone())
    }

    /// Like [`Gate::session`], but first expires the session if its deadline has passed.
    pub async fn session_at(&self, id: &SessionId, now: u64) -> Result<Session, GateError> {
        let slot = self.slot(id)?;
        let mut session = slot.session.lock().await;
        self.expire_if_due(&slot, &mut session, now)?;
        Ok(session.clone())
    }

    pub async fn payment_spec(&self, id: &SessionId) -> Result<PaymentSpec, GateError> {
        let session = self.session(id).await?;
        session
            .payment_spec()
            .ok_or(GateError::WrongState(session.state))
    }

    /// Moves an open session past its deadline to `expired`. Returns whether it did.
    fn expire_if_due(
        &self,
        slot: &Slot,
        session: &mut Session,
        now: u64,
    ) -> Result<bool, GateError> {
        if session.state.is_open() && session.is_past_deadline(now) {
            self.transition(slot, session, SessionState::Expired, SessionEvent::Expired)?;
            return Ok(true);
        }
        Ok(false)
    }

    fn transition(
        &self,
        slot: &Slot,
        session: &mut Session,
        next: SessionState,
        event: SessionEvent,
    ) -> Result<(), GateError> {
        assert!(
            session.state.can_move_to(next),
            "illegal transition {:?} -> {:?}",
            session.state,
            next
        );
        let mut updated = session.clone();
        updated.state = next;
        self.journal.record(event, &updated)?;
        *session = updated;
        slot.open.store(next.is_open(), Ordering::SeqCst);
        Ok(())
    }

    fn check_live(&self, slot: &Slot, session: &mut Session, now: u64) -> Result<(), GateError> {
        if self.expire_if_due(slot, session, now)? || session.state == SessionState::Expired {
            return Err(GateError::SessionExpired);
        }
        Ok(())
    }

    /// Succeeds once the node reports the challenge representative for the payer.
    /// Calling it again after success returns the same payment spec.
    pub async fn verify_ownership(
        &self,
        id: &SessionId,
        now: u64,
    ) -> Result<(Session, PaymentSpec), GateError> {
        let slot = self.slot(id)?;
        let mut session = slot.session.lock().await;
        self.check_live(&slot, &mut session, now)?;
        match session.state {
            SessionState::AwaitingOwnership => {}
            SessionState::AwaitingPayment => {
                let spec = session.payment_spec().expect("awaiting payment");
                return Ok((session.clone(), spec));
            }
            other => return Err(GateError::WrongState(other)),
        }

        let info = self
            .node
            .account_info(&session.payer)
            .await?
            .ok_or(GateError::AccountNotFound)?;
        if info.representative != session.challenge_representative {
            return Err(GateError::RepresentativeMismatch {
                observed: info.representative,
            });
        }
        self.transition(
            &slot,
            &mut session,
            SessionState::AwaitingPayment,
            SessionEvent::OwnershipVerified,
        )?;
        let spec = session.payment_spec().expect("awaiting payment");
        Ok((session.clone(), spec))
    }

    /// Scans the payer's recent history for a qualifying send and grants a token for it.
    pub async fn verify_payment(
        &self,
        id: &SessionId,
        now: u64,
    ) -> Result<(Session, AccessToken), GateError> {
        let slot = self.slot(id)?;
        let mut session = slot.session.lock().await;
        self.check_live(&slot, &mut session, now)?;
        if session.state != SessionState::AwaitingPayment {
            return Err(GateError::WrongState(session.state));
        }

        let mut head = None;
        let mut best_underpaid: Option<RawAmount> = None;
        let mut saw_unconfirmed = false;
        'pages: for _ in 0..self.settings.history_max_pages {
            let page = self
                .node
                .account_history(&session.payer, self.settings.history_page_size, head)
                .await?
                .ok_or(GateError::AccountNotFound)?;
            for entry in &page.entries {
                if entry.height <= session.frontier_height_at_creation {
                    break 'pages;
                }
                if entry.kind != BlockKind::Send || entry.counterparty != session.deposit_account {
                    continue;
                }
                if entry.amount < session.price {
                    best_underpaid = best_underpaid.max(Some(entry.amount));
                    continue;
                }
                if self.store.contains(&entry.hash) {
                    continue;
                }
                if self.settings.require_confirmation && !entry.confirmed {
                    saw_unconfirmed = true;
                    continue;
                }
                if self.store.consume(&entry.hash)? {
                    let token = self.grant(&slot, &mut session, entry.hash, now)?;
                    return Ok((session.clone(), token));
                }
            }
            match page.next_head {
                Some(next) => head = Some(next),
                None => break,
            }
        }

        Err(if saw_unconfirmed {
            GateError::UnconfirmedPayment
        } else if let Some(best_amount) = best_underpaid {
            GateError::Underpaid { best_amount }
        } else {
            GateError::PaymentNotFound
        })
    }

    fn grant(
        &self,
        slot: &Slot,
        session: &mut Session,
        hash: BlockHash,
        now: u64,
    ) -> Result<AccessToken, GateError> {
        let token = self.signer.issue(TokenPayload {
            session_id: session.id,
            account: session.payer,
            issued_at: now,
            expires_at: now + self.settings.token_ttl_secs,
        });
        let mut granted = session.clone();
        granted.state = SessionState::Granted;
        granted.consumed_send_hash = Some(hash);
        granted.token = Some(token.text.clone());
        if let Err(e) = self.journal.record(SessionEvent::Granted, &granted) {
            // The hash is burned; never hand out a token that is not on disk.
            session.state = SessionState::Failed;
            slot.open.store(false, Ordering::SeqCst);
            let _ = self.journal.record(SessionEvent::Failed, session);
            return Err(e.into());
        }
        *session = granted;
        slot.open.store(false, Ordering::SeqCst);
        Ok(token)
    }

    /// Expires every open session whose deadline has passed. Idempotent.
    pub async fn expire_sessions(&self, now: u64) -> Result<usize, GateError> {
        let slots: Vec<_> = self.sessions.lock().unwrap().values().cloned().collect();
        let mut expired = 0;
        for slot in slots {
            if !slot.open.load(Ordering::SeqCst) || now < slot.expires_at {
                continue;
            }
            let mut session = slot.session.lock().await;
            if self.expire_if_due(&slot, &mut session, now)? {
                expired += 1;
            }
        }
        Ok(expired)
    }

    pub fn verify_token(&self, text: &str, now: u64) -> Result<TokenPayload, TokenError> {
        self.signer.verify(text, now)
    }

    /// All sessions, ordered by id.
    pub async fn snapshot(&self) -> Vec<Session> {
        let slots: Vec<_> = self.sessions.lock().unwrap().values().cloned().collect();
        let mut out = Vec::with_capacity(slots.len());
        for slot in slots {
            out.push(slot.session.lock().await.clone());
        }
        out.sort_by_key(|s| s.id);
        out
    }
}

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::codec::{serde_via_str, AccountAddress, BlockHash, RawAmount};

/// 128-bit random session identifier, 32 lowercase hex chars.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId([u8; 16]);

impl SessionId {
    pub fn random() -> Self {
        let mut bytes = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut bytes);
        SessionId(bytes)
    }

    pub const fn from_bytes(bytes: [u8; 16]) -> Self {
        SessionId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionId({self})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("session id must be 32 lowercase hex characters")]
pub struct SessionIdError;

impl FromStr for SessionId {
    type Err = SessionIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 32 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(SessionIdError);
        }
        let mut out = [0u8; 16];
        hex::decode_to_slice(s, &mut out).map_err(|_| SessionIdError)?;
        Ok(SessionId(out))
    }
}

serde_via_str!(SessionId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingOwnership,
    AwaitingPayment,
    Granted,
    Expired,
    Failed,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::AwaitingOwnership => "awaiting_ownership",
            SessionState::AwaitingPayment => "awaiting_payment",
            SessionState::Granted => "granted",
            SessionState::Expired => "expired",
            SessionState::Failed => "failed",
        }
    }

    pub fn is_open(self) -> bool {
        matches!(
            self,
            SessionState::AwaitingOwnership | SessionState::AwaitingPayment
        )
    }

    /// The only legal edges of the session state machine.
    pub fn can_move_to(self, next: SessionState) -> bool {
        use SessionState::*;
        matches!(
            (self, next),
            (AwaitingOwnership, AwaitingPayment)
                | (AwaitingPayment, Granted)
                | (AwaitingOwnership | AwaitingPayment, Expired | Failed)
        )
    }
}

/// Gate-side record of one pay-to-pass challenge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub payer: AccountAddress,
    pub state: SessionState,
    pub challenge_representative: AccountAddress,
    /// Payer's block count when the session was opened; only sends above it count.
    pub frontier_height_at_creation: u64,
    pub price: RawAmount,
    pub deposit_account: AccountAddress,
    pub created_at: u64,
    pub expires_at: u64,
    pub consumed_send_hash: Option<BlockHash>,
    pub token: Option<String>,
}

/// What the payer has to send, and where.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentSpec {
    pub deposit_account: AccountAddress,
    pub price: RawAmount,
    pub pay_by: u64,
    pub payment_uri: String,
}

impl PaymentSpec {
    pub fn new(deposit_account: AccountAddress, price: RawAmount, pay_by: u64) -> Self {
        PaymentSpec {
            payment_uri: format!("nano:{deposit_account}?amount={price}"),
            deposit_account,
            price,
            pay_by,
        }
    }
}

impl Session {
    /// Payment instructions; only meaningful while awaiting payment.
    pub fn payment_spec(&self) -> Option<PaymentSpec> {
        (self.state == SessionState::AwaitingPayment)
            .then(|| PaymentSpec::new(self.deposit_account, self.price, self.expires_at))
    }

    pub fn is_past_deadline(&self, now: u64) -> bool {
        now >= self.expires_at
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SessionState::*;

    #[test]
    fn transition_table() {
        let all = [AwaitingOwnership, AwaitingPayment, Granted, Expired, Failed];
        let allowed: Vec<_> = all
            .iter()
            .flat_map(|&a| all.iter().map(move |&b| (a, b)))
            .filter(|(a, b)| a.can_move_to(*b))
            .collect();
        assert_eq!(
            allowed,
            vec![
                (AwaitingOwnership, AwaitingPayment),
                (AwaitingOwnership, Expired),
                (AwaitingOwnership, Failed),
                (AwaitingPayment, Granted),
                (AwaitingPayment, Expired),
                (AwaitingPayment, Failed),
            ]
        );
    }

    #[test]
    fn payment_uri_template() {
        let deposit = AccountAddress::from_public_key([0; 32]);
        let spec = PaymentSpec::new(deposit, RawAmount::new(10u128.pow(27)), 99);
        assert_eq!(
            spec.payment_uri,
            format!("nano:{deposit}?amount=1000000000000000000000000000")
        );
        assert_eq!(
            PaymentSpec::new(deposit, RawAmount::new(1), 99).payment_uri,
            format!("nano:{deposit}?amount=1")
        );
    }

    #[test]
    fn session_id_text() {
        let id = SessionId::from_bytes([0xab; 16]);
        assert_eq!(id.to_string(), "ab".repeat(16));
        assert_eq!(id.to_string().parse::<SessionId>().unwrap(), id);
        assert!("AB".repeat(16).parse::<SessionId>().is_err());
        assert!("ab".repeat(15).parse::<SessionId>().is_err());
    }
}

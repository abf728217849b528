//! Stateless bearer tokens: `base64url(payload) "." base64url(HMAC-SHA256(payload))`.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::codec::AccountAddress;
use crate::session::SessionId;

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPayload {
    pub session_id: SessionId,
    pub account: AccountAddress,
    pub issued_at: u64,
    pub expires_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessToken {
    pub payload: TokenPayload,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TokenError {
    /// Anything that does not authenticate, including structurally broken text.
    #[error("bad_signature")]
    BadSignature,
    #[error("expired")]
    Expired,
}

impl TokenError {
    pub fn code(&self) -> &'static str {
        match self {
            TokenError::BadSignature => "bad_signature",
            TokenError::Expired => "expired",
        }
    }
}

#[derive(Clone)]
pub struct TokenSigner {
    key: Vec<u8>,
}

impl std::fmt::Debug for TokenSigner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TokenSigner(..)")
    }
}

impl TokenSigner {
    pub fn new(secret: &[u8]) -> Self {
        TokenSigner {
            key: secret.to_vec(),
        }
    }

    fn mac(&self) -> HmacSha256 {
        HmacSha256::new_from_slice(&self.key).expect("HMAC accepts any key length")
    }

    pub fn issue(&self, payload: TokenPayload) -> AccessToken {
        let bytes = serde_json::to_vec(&payload).expect("payload serializes");
        let mut mac = self.mac();
        mac.update(&bytes);
        let tag = mac.finalize().into_bytes();
        let text = format!(
            "{}.{}",
            URL_SAFE_NO_PAD.encode(&bytes),
            URL_SAFE_NO_PAD.encode(tag)
        );
        AccessToken { payload, text }
    }

    /// Valid strictly before `expires_at`.
    pub fn verify(&self, text: &str, now: u64) -> Result<TokenPayload, TokenError> {
        let (payload_b64, tag_b64) = text.split_once('.').ok_or(TokenError::BadSignature)?;
        let payload = URL_SAFE_NO_PAD
            .decode(payload_b64)
            .map_err(|_| TokenError::BadSignature)?;
        let tag = URL_SAFE_NO_PAD
            .decode(tag_b64)
            .map_err(|_| TokenError::BadSignature)?;
        let mut mac = self.mac();
        mac.update(&payload);
        mac.verify_slice(&tag)
            .map_err(|_| TokenError::BadSignature)?;
        let payload: TokenPayload =
            serde_json::from_slice(&payload).map_err(|_| TokenError::BadSignature)?;
        if now >= payload.expires_at {
            return Err(TokenError::Expired);
        }
        Ok(payload)
    }
}

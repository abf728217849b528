//! Client for the mock node's `sim_*` admin actions: a stand-in for a real
//! wallet in tests, demos and the `wallet` CLI.

use serde_json::{json, Value};
use thiserror::Error;
use xnogate_core::{AccountAddress, BlockHash, RawAmount};

#[derive(Debug, Error)]
pub enum WalletError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("node rejected request: {0}")]
    Rejected(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
pub struct SimWallet {
    url: String,
    http: reqwest::Client,
}

impl SimWallet {
    pub fn new(url: impl Into<String>) -> Self {
        SimWallet {
            url: url.into(),
            http: reqwest::Client::new(),
        }
    }

    async fn call(&self, body: Value) -> Result<Value, WalletError> {
        let response = self
            .http
            .post(&self.url)
            .json(&body)
            .send()
            .await
            .map_err(|e| WalletError::Transport(e.to_string()))?;
        let value: Value = response
            .json()
            .await
            .map_err(|e| WalletError::Malformed(e.to_string()))?;
        if let Some(err) = value.get("error").and_then(Value::as_str) {
            return Err(WalletError::Rejected(err.to_string()));
        }
        Ok(value)
    }

    async fn call_for_hash(&self, body: Value) -> Result<BlockHash, WalletError> {
        let value = self.call(body).await?;
        value
            .get("hash")
            .and_then(Value::as_str)
            .and_then(|h| h.parse().ok())
            .ok_or_else(|| WalletError::Malformed("missing hash".into()))
    }

    pub async fn mint(
        &self,
        account: &AccountAddress,
        amount: RawAmount,
    ) -> Result<BlockHash, WalletError> {
        self.call_for_hash(json!({
            "action": "sim_mint",
            "account": account.to_string(),
            "amount": amount.to_string(),
        }))
        .await
    }

    pub async fn send(
        &self,
        from: &AccountAddress,
        to: &AccountAddress,
        amount: RawAmount,
    ) -> Result<BlockHash, WalletError> {
        self.call_for_hash(json!({
            "action": "sim_send",
            "from": from.to_string(),
            "to": to.to_string(),
            "amount": amount.to_string(),
        }))
        .await
    }

    pub async fn receive(
        &self,
        account: &AccountAddress,
        send_hash: &BlockHash,
    ) -> Result<BlockHash, WalletError> {
        self.call_for_hash(json!({
            "action": "sim_receive",
            "account": account.to_string(),
            "hash": send_hash.to_string(),
        }))
        .await
    }

    pub async fn change_representative(
        &self,
        account: &AccountAddress,
        representative: &AccountAddress,
    ) -> Result<BlockHash, WalletError> {
        self.call_for_hash(json!({
            "action": "sim_change_representative",
            "account": account.to_string(),
            "representative": representative.to_string(),
        }))
        .await
    }

    pub async fn set_confirmed(
        &self,
        hash: &BlockHash,
        confirmed: bool,
    ) -> Result<(), WalletError> {
        self.call(json!({
            "action": "sim_set_confirmed",
            "hash": hash.to_string(),
            "confirmed": if confirmed { "true" } else { "false" },
        }))
        .await
        .map(|_| ())
    }
}

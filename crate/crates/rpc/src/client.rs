//! Read-only client for the RPC subset. Works against the mock node and
//! against public nodes alike; it never exposes a mutating action.

use std::time::Duration;

use async_trait::async_trait;
use serde_json::{json, Map, Value};
use xnogate_core::{
    AccountAddress, AccountInfoView, BlockHash, BlockKind, BlockView, HistoryEntryView,
    HistoryPage, NodeError, NodeReader, RawAmount,
};

use crate::wire::{ERR_ACCOUNT_NOT_FOUND, ERR_BLOCK_NOT_FOUND};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);
pub const MAX_HISTORY_COUNT: u32 = 500;

#[derive(Debug, Clone)]
pub struct RpcClient {
    url: String,
    http: reqwest::Client,
}

impl RpcClient {
    pub fn new(url: impl Into<String>) -> Result<Self, NodeError> {
        Self::with_timeout(url, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(url: impl Into<String>, timeout: Duration) -> Result<Self, NodeError> {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| NodeError::Transport(e.to_string()))?;
        Ok(RpcClient {
            url: url.into(),
            http,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Posts one request. In-body errors are returned as `Ok(Err(message))`.
    async fn call(&self, body: Value) -> Result<Result<Map<String, Value>, String>, NodeError> {
        let response = self
            .http
            .post(&self.url)
            .json(&body)
            .send()
            .await
            .map_err(|e| NodeError::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(NodeError::Transport(format!("HTTP {}", response.status())));
        }
        let bytes = response
            .bytes()
            .await
            .map_err(|e| NodeError::Transport(e.to_string()))?;
        match serde_json::from_slice::<Value>(&bytes) {
            Ok(Value::Object(map)) => match map.get("error") {
                Some(Value::String(msg)) => Ok(Err(msg.clone())),
                Some(_) => Err(NodeError::Malformed("non-string error".into())),
                None => Ok(Ok(map)),
            },
            _ => Err(NodeError::Malformed("response is not a JSON object".into())),
        }
    }

    /// True when anything at the URL answers with a JSON object.
    pub async fn ping(&self) -> bool {
        self.call(json!({"action": "version"})).await.is_ok()
    }

    pub async fn fetch_account_info(
        &self,
        account: &AccountAddress,
    ) -> Result<Option<AccountInfoView>, NodeError> {
        let body = json!({
            "action": "account_info",
            "account": account.to_string(),
            "representative": "true",
        });
        let map = match self.call(body).await? {
            Ok(map) => map,
            Err(msg) if msg == ERR_ACCOUNT_NOT_FOUND => return Ok(None),
            Err(msg) => return Err(NodeError::Node(msg)),
        };
        let view = AccountInfoView {
            frontier: parse(&map, "frontier")?,
            balance: parse(&map, "balance")?,
            block_count: parse(&map, "block_count")?,
            representative: parse(&map, "representative")?,
            confirmation_height: parse(&map, "confirmation_height")?,
        };
        if view.confirmation_height > view.block_count {
            return Err(NodeError::Malformed(
                "confirmation_height exceeds block_count".into(),
            ));
        }
        Ok(Some(view))
    }

    pub async fn fetch_history(
        &self,
        account: &AccountAddress,
        count: u32,
        head: Option<BlockHash>,
    ) -> Result<Option<HistoryPage>, NodeError> {
        if !(1..=MAX_HISTORY_COUNT).contains(&count) {
            return Err(NodeError::InvalidRequest(format!(
                "count must be 1..={MAX_HISTORY_COUNT}"
            )));
        }
        let mut body = json!({
            "action": "account_history",
            "account": account.to_string(),
            "count": count.to_string(),
        });
        if let Some(h) = head {
            body["head"] = Value::String(h.to_string());
        }
        let map = match self.call(body).await? {
            Ok(map) => map,
            Err(msg) if msg == ERR_ACCOUNT_NOT_FOUND => return Ok(None),
            Err(msg) => return Err(NodeError::Node(msg)),
        };
        let entries = match map.get("history") {
            Some(Value::Array(items)) => items
                .iter()
                .map(history_entry)
                .collect::<Result<Vec<_>, _>>()?,
            // Some node versions send an empty string for an empty history.
            Some(Value::String(s)) if s.is_empty() => vec![],
            _ => return Err(NodeError::Malformed("missing history".into())),
        };
        let next_head = match map.get("previous") {
            None => None,
            Some(_) => Some(parse(&map, "previous")?),
        };
        Ok(Some(HistoryPage { entries, next_head }))
    }

    pub async fn fetch_block(&self, hash: &BlockHash) -> Result<Option<BlockView>, NodeError> {
        let body = json!({"action": "block_info", "json_block": "true", "hash": hash.to_string()});
        let map = match self.call(body).await? {
            Ok(map) => map,
            Err(msg) if msg == ERR_BLOCK_NOT_FOUND => return Ok(None),
            Err(msg) => return Err(NodeError::Node(msg)),
        };
        let contents = match map.get("contents") {
            Some(Value::Object(c)) => c,
            _ => return Err(NodeError::Malformed("missing contents".into())),
        };
        let kind = kind_field(&map, "subtype")?;
        let amount: RawAmount = parse(&map, "amount")?;
        if kind == BlockKind::Change && !amount.is_zero() {
            return Err(NodeError::Malformed(
                "change block with non-zero amount".into(),
            ));
        }
        let destination = match kind {
            BlockKind::Send => Some(parse(contents, "link_as_account")?),
            _ => None,
        };
        Ok(Some(BlockView {
            hash: *hash,
            account: parse(&map, "block_account")?,
            kind,
            amount,
            height: parse(&map, "height")?,
            destination,
            representative: parse(contents, "representative")?,
            confirmed: bool_field(&map, "confirmed")?,
        }))
    }
}

fn history_entry(item: &Value) -> Result<HistoryEntryView, NodeError> {
    let map = item
        .as_object()
        .ok_or_else(|| NodeError::Malformed("history entry is not an object".into()))?;
    let entry = HistoryEntryView {
        kind: kind_field(map, "type")?,
        counterparty: parse(map, "account")?,
        amount: parse(map, "amount")?,
        hash: parse(map, "hash")?,
        height: parse(map, "height")?,
        confirmed: bool_field(map, "confirmed")?,
        local_timestamp: parse(map, "local_timestamp")?,
    };
    if entry.kind == BlockKind::Change && !entry.amount.is_zero() {
        return Err(NodeError::Malformed(
            "change entry with non-zero amount".into(),
        ));
    }
    Ok(entry)
}

fn text<'a>(map: &'a Map<String, Value>, key: &str) -> Result<&'a str, NodeError> {
    map.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| NodeError::Malformed(format!("missing string field {key}")))
}

fn parse<T: std::str::FromStr>(map: &Map<String, Value>, key: &str) -> Result<T, NodeError> {
    text(map, key)?
        .parse()
        .map_err(|_| NodeError::Malformed(format!("invalid {key}")))
}

fn bool_field(map: &Map<String, Value>, key: &str) -> Result<bool, NodeError> {
    match text(map, key)? {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(NodeError::Malformed(format!("invalid {key}"))),
    }
}

fn kind_field(map: &Map<String, Value>, key: &str) -> Result<BlockKind, NodeError> {
    BlockKind::parse(text(map, key)?).ok_or_else(|| NodeError::Malformed(format!("invalid {key}")))
}

#[async_trait]
impl NodeReader for RpcClient {
    async fn account_info(
        &self,
        account: &AccountAddress,
    ) -> Result<Option<AccountInfoView>, NodeError> {
        self.fetch_account_info(account).await
    }

    async fn account_history(
        &self,
        account: &AccountAddress,
        count: u32,
        head: Option<BlockHash>,
    ) -> Result<Option<HistoryPage>, NodeError> {
        self.fetch_history(account, count, head).await
    }

    async fn block(&self, hash: &BlockHash) -> Result<Option<BlockView>, NodeError> {
        self.fetch_block(hash).await
    }
}

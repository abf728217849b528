//! Read-only view of a ledger as seen through a node.
//!
//! The gate never writes to the ledger; it only needs these three queries.
//! [`crate::SimLedger`] implements the trait in-process, and the RPC client
//! implements it over HTTP.

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{AccountAddress, BlockHash, RawAmount};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Send,
    Receive,
    Change,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Send => "send",
            BlockKind::Receive => "receive",
            BlockKind::Change => "change",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "send" => Some(BlockKind::Send),
            "receive" => Some(BlockKind::Receive),
            "change" => Some(BlockKind::Change),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountInfoView {
    pub frontier: BlockHash,
    pub balance: RawAmount,
    pub block_count: u64,
    pub representative: AccountAddress,
    pub confirmation_height: u64,
}

/// One entry of an account's history. `counterparty` is the destination for
/// sends, the source account for receives and the new representative for
/// change blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntryView {
    pub kind: BlockKind,
    pub counterparty: AccountAddress,
    pub amount: RawAmount,
    pub hash: BlockHash,
    pub height: u64,
    pub confirmed: bool,
    pub local_timestamp: u64,
}

/// Newest-first slice of history. `next_head` is where the next page starts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HistoryPage {
    pub entries: Vec<HistoryEntryView>,
    pub next_head: Option<BlockHash>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockView {
    pub hash: BlockHash,
    pub account: AccountAddress,
    pub kind: BlockKind,
    pub amount: RawAmount,
    pub height: u64,
    /// Set for sends only.
    pub destination: Option<AccountAddress>,
    pub representative: AccountAddress,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("node error: {0}")]
    Node(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// `Ok(None)` means the account or block does not exist, which is a normal
/// answer rather than a failure.
#[async_trait]
pub trait NodeReader: Send + Sync {
    async fn account_info(
        &self,
        account: &AccountAddress,
    ) -> Result<Option<AccountInfoView>, NodeError>;

    async fn account_history(
        &self,
        account: &AccountAddress,
        count: u32,
        head: Option<BlockHash>,
    ) -> Result<Option<HistoryPage>, NodeError>;

    async fn block(&self, hash: &BlockHash) -> Result<Option<BlockView>, NodeError>;
}

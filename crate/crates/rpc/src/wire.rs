//! Response bodies and error strings shared by the mock node and the client.

use serde::{Deserialize, Serialize};

pub const ERR_ACCOUNT_NOT_FOUND: &str = "Account not found";
pub const ERR_BAD_ACCOUNT: &str = "Bad account number";
pub const ERR_BLOCK_NOT_FOUND: &str = "Block not found";
pub const ERR_BAD_HASH: &str = "Bad hash number";
pub const ERR_BAD_AMOUNT: &str = "Bad amount number";
pub const ERR_INVALID_COUNT: &str = "Invalid count limit";
pub const ERR_UNKNOWN_COMMAND: &str = "Unknown command";
pub const ERR_UNABLE_TO_PARSE: &str = "Unable to parse JSON";
pub const ERR_ADMIN_DISABLED: &str = "Admin disabled";

/// 64 zeros, used for absent `previous` and `link` fields.
pub const ZERO_HASH: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccountInfoBody {
    pub frontier: String,
    pub balance: String,
    pub block_count: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub representative: Option<String>,
    pub confirmation_height: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryEntryBody {
    #[serde(rename = "type")]
    pub kind: String,
    pub account: String,
    pub amount: String,
    pub hash: String,
    pub height: String,
    pub local_timestamp: String,
    pub confirmed: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccountHistoryBody {
    pub account: String,
    pub history: Vec<HistoryEntryBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub previous: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockContentsBody {
    #[serde(rename = "type")]
    pub block_type: String,
    pub account: String,
    pub previous: String,
    pub representative: String,
    pub balance: String,
    pub link: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_as_account: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockInfoBody {
    pub block_account: String,
    pub amount: String,
    pub balance: String,
    pub height: String,
    pub local_timestamp: String,
    pub confirmed: String,
    pub contents: BlockContentsBody,
    pub subtype: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HashBody {
    pub hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuccessBody {
    pub success: String,
}

pub fn bool_text(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

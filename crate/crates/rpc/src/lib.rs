//! The Nano RPC subset the gate depends on.
//!
//! Every request is a single JSON object POSTed to `/` with an `"action"`
//! field; every response is a JSON object, either the action's success shape
//! or `{"error": "<message>"}` with HTTP 200. All numbers are decimal strings.
//!
//! | action            | request fields                               |
//! |-------------------|----------------------------------------------|
//! | `account_info`    | `account`, `representative: "true"`          |
//! | `account_history` | `account`, `count`, optional `head`          |
//! | `block_info`      | `hash`, `json_block: "true"`                 |
//!
//! The mock node additionally accepts `sim_*` admin actions that drive the
//! simulated ledger when started with admin enabled. Unlike real nodes it
//! lists change blocks in `account_history`.

pub mod client;
pub mod mock_node;
pub mod wallet;
pub mod wire;

pub use client::RpcClient;
pub use mock_node::{MockNode, MockNodeHandle};
pub use wallet::{SimWallet, WalletError};

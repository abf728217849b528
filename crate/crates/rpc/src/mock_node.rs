//! HTTP stand-in for a public Nano node, backed by [`SimLedger`].

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::post;
use axum::Router;
use serde::Serialize;
use serde_json::{Map, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use xnogate_core::ledger::{BlockLink, LedgerError, SimBlock};
use xnogate_core::{AccountAddress, BlockHash, RawAmount, SimLedger};

use crate::wire::*;

type Reply = Result<String, String>;

fn reply<T: Serialize>(body: &T) -> Reply {
    Ok(serde_json::to_string(body).expect("response serializes"))
}

/// Request dispatcher. `handle` is transport-free so it can be exercised directly.
pub struct MockNode {
    ledger: Arc<SimLedger>,
    admin_enabled: bool,
}

impl MockNode {
    pub fn new(ledger: Arc<SimLedger>, admin_enabled: bool) -> Self {
        MockNode {
            ledger,
            admin_enabled,
        }
    }

    pub fn ledger(&self) -> &Arc<SimLedger> {
        &self.ledger
    }

    /// Maps one request body to one JSON response body. Never fails.
    pub fn handle(&self, body: &[u8]) -> String {
        let result = match serde_json::from_slice::<Value>(body) {
            Ok(Value::Object(req)) => self.dispatch(&req),
            _ => Err(ERR_UNABLE_TO_PARSE.to_string()),
        };
        result.unwrap_or_else(|error| {
            serde_json::to_string(&ErrorBody { error }).expect("serializes")
        })
    }

    fn dispatch(&self, req: &Map<String, Value>) -> Reply {
        let action = req.get("action").and_then(Value::as_str).unwrap_or("");
        if action.starts_with("sim_") && !self.admin_enabled {
            return Err(ERR_ADMIN_DISABLED.into());
        }
        match action {
            "account_info" => self.account_info(req),
            "account_history" => self.account_history(req),
            "block_info" => self.block_info(req),
            "sim_mint" => {
                let account = account_field(req, "account")?;
                let amount = amount_field(req, "amount")?;
                hash_reply(self.ledger.mint(&account, amount))
            }
            "sim_send" => {
                let from = account_field(req, "from")?;
                let to = account_field(req, "to")?;
                let amount = amount_field(req, "amount")?;
                hash_reply(self.ledger.send(&from, &to, amount))
            }
            "sim_receive" => {
                let account = account_field(req, "account")?;
                let hash = hash_field(req, "hash")?;
                hash_reply(self.ledger.receive(&account, &hash))
            }
            "sim_change_representative" => {
                let account = account_field(req, "account")?;
                let rep = account_field(req, "representative")?;
                hash_reply(self.ledger.change_representative(&account, &rep))
            }
            "sim_set_confirmed" => {
                let hash = hash_field(req, "hash")?;
                let confirmed = match str_field(req, "confirmed") {
                    Some("true") => true,
                    Some("false") => false,
                    _ => return Err("Bad confirmed flag".into()),
                };
                self.ledger
                    .set_confirmed(&hash, confirmed)
                    .map_err(ledger_error)?;
                reply(&SuccessBody {
                    success: String::new(),
                })
            }
            _ => Err(ERR_UNKNOWN_COMMAND.into()),
        }
    }

    fn account_info(&self, req: &Map<String, Value>) -> Reply {
        let account = account_field(req, "account")?;
        let info = self.ledger.account_info(&account).map_err(ledger_error)?;
        let with_rep = str_field(req, "representative") == Some("true");
        reply(&AccountInfoBody {
            frontier: info.frontier.to_string(),
            balance: info.balance.to_string(),
            block_count: info.block_count.to_string(),
            representative: with_rep.then(|| info.representative.to_string()),
            confirmation_height: info.confirmation_height.to_string(),
        })
    }

    fn account_history(&self, req: &Map<String, Value>) -> Reply {
        let account = account_field(req, "account")?;
        let count = str_field(req, "count")
            .and_then(|c| c.parse::<usize>().ok())
            .filter(|c| *c > 0)
            .ok_or(ERR_INVALID_COUNT)?;
        let head = match req.get("head") {
            None => None,
            Some(_) => Some(hash_field(req, "head")?),
        };
        let (blocks, previous) = self
            .ledger
            .history(&account, count, head.as_ref())
            .map_err(ledger_error)?;
        reply(&AccountHistoryBody {
            account: account.to_string(),
            history: blocks
                .iter()
                .map(|b| HistoryEntryBody {
                    kind: b.kind.as_str().into(),
                    account: b.counterparty.to_string(),
                    amount: b.amount.to_string(),
                    hash: b.hash.to_string(),
                    height: b.height.to_string(),
                    local_timestamp: b.local_timestamp.to_string(),
                    confirmed: bool_text(b.confirmed).into(),
                })
                .collect(),
            previous: previous.map(|h| h.to_string()),
        })
    }

    fn block_info(&self, req: &Map<String, Value>) -> Reply {
        let hash = hash_field(req, "hash")?;
        let block = self.ledger.block(&hash).map_err(ledger_error)?;
        reply(&block_info_body(&block))
    }

    pub fn router(self: Arc<Self>) -> Router {
        Router::new().route("/", post(handle_post)).with_state(self)
    }
}

fn block_info_body(b: &SimBlock) -> BlockInfoBody {
    BlockInfoBody {
        block_account: b.account.to_string(),
        amount: b.amount.to_string(),
        balance: b.balance_after.to_string(),
        height: b.height.to_string(),
        local_timestamp: b.local_timestamp.to_string(),
        confirmed: bool_text(b.confirmed).into(),
        contents: BlockContentsBody {
            block_type: "state".into(),
            account: b.account.to_string(),
            previous: b
                .previous
                .map_or_else(|| ZERO_HASH.to_string(), |h| h.to_string()),
            representative: b.representative.to_string(),
            balance: b.balance_after.to_string(),
            link: BlockHash::from_bytes(b.link.as_bytes()).to_string(),
            link_as_account: match b.link {
                BlockLink::Destination(d) => Some(d.to_string()),
                _ => None,
            },
        },
        subtype: b.kind.as_str().into(),
    }
}

fn hash_reply(result: Result<BlockHash, LedgerError>) -> Reply {
    let hash = result.map_err(ledger_error)?;
    reply(&HashBody {
        hash: hash.to_string(),
    })
}

fn ledger_error(e: LedgerError) -> String {
    match e {
        LedgerError::UnknownAccount => ERR_ACCOUNT_NOT_FOUND.into(),
        LedgerError::UnknownBlock => ERR_BLOCK_NOT_FOUND.into(),
        other => other.code().into(),
    }
}

fn str_field<'a>(req: &'a Map<String, Value>, key: &str) -> Option<&'a str> {
    req.get(key).and_then(Value::as_str)
}

fn account_field(req: &Map<String, Value>, key: &str) -> Result<AccountAddress, String> {
    str_field(req, key)
        .and_then(|t| AccountAddress::decode(t).ok())
        .ok_or_else(|| ERR_BAD_ACCOUNT.into())
}

fn hash_field(req: &Map<String, Value>, key: &str) -> Result<BlockHash, String> {
    str_field(req, key)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| ERR_BAD_HASH.into())
}

fn amount_field(req: &Map<String, Value>, key: &str) -> Result<RawAmount, String> {
    str_field(req, key)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| ERR_BAD_AMOUNT.into())
}

async fn handle_post(State(node): State<Arc<MockNode>>, body: Bytes) -> impl IntoResponse {
    let out = node.handle(&body);
    ([(header::CONTENT_TYPE, "application/json")], out)
}

/// Serves `node` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    node: Arc<MockNode>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, node.router())
        .with_graceful_shutdown(shutdown)
        .await
}

/// A mock node running on a background task; stops when dropped.
pub struct MockNodeHandle {
    pub addr: SocketAddr,
    pub ledger: Arc<SimLedger>,
    stop: Option<oneshot::Sender<()>>,
}

impl MockNodeHandle {
    /// Binds `127.0.0.1:0` and serves on the current tokio runtime.
    pub async fn spawn(ledger: Arc<SimLedger>, admin_enabled: bool) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let (stop, stopped) = oneshot::channel::<()>();
        let node = Arc::new(MockNode::new(ledger.clone(), admin_enabled));
        tokio::spawn(async move {
            let _ = serve(listener, node, async {
                let _ = stopped.await;
            })
            .await;
        });
        Ok(MockNodeHandle {
            addr,
            ledger,
            stop: Some(stop),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}/", self.addr)
    }
}

impl Drop for MockNodeHandle {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
    }
}

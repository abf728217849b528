//! `gate`: run the gate, run a mock node, drive a simulated wallet, or walk
//! through the whole flow end to end.
//!
//! On success the last stdout line is a block hash, a token, or `OK`.
//! Failures go to stderr with a nonzero exit code.

mod e2e;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use xnogate_core::{AccountAddress, BlockHash, RawAmount, SimLedger, SystemClock};
use xnogate_rpc::{MockNode, RpcClient, SimWallet};
use xnogate_service::GateService;

const DEFAULT_NODE: &str = "http://127.0.0.1:7076/";

#[derive(Parser)]
#[command(
    name = "gate",
    version,
    about = "Pay-to-pass access gate backed by Nano micropayments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gate HTTP service.
    Serve {
        /// JSON config file; GATE_* environment variables override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a simulated node speaking the RPC subset.
    Mocknode {
        #[arg(long, default_value = "127.0.0.1:7076")]
        listen: SocketAddr,
        /// Accept sim_* admin actions.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        admin: bool,
        /// How long new blocks stay unconfirmed: "0", "500ms", "5s" or "never".
        #[arg(long, default_value = "0")]
        confirmation_delay: String,
    },
    /// Simulated user wallet (needs a mock node with admin enabled).
    #[command(subcommand)]
    Wallet(WalletCommand),
    /// Scripted walk through all six steps against a running gate and mock node.
    E2e(e2e::E2eArgs),
}

#[derive(Args)]
struct NodeArg {
    #[arg(long, env = "GATE_NODE_URL", default_value = DEFAULT_NODE)]
    node: String,
}

#[derive(Args)]
struct AmountArg {
    /// Amount in XNO, or in raw with --raw.
    #[arg(long)]
    amount: String,
    #[arg(long)]
    raw: bool,
}

impl AmountArg {
    fn parse(&self) -> anyhow::Result<RawAmount> {
        let parsed = if self.raw {
            self.amount.parse::<RawAmount>().map_err(|e| anyhow!("{e}"))
        } else {
            RawAmount::from_xno_decimal(&self.amount).map_err(|e| anyhow!("{e}"))
        };
        parsed.with_context(|| format!("bad amount {:?}", self.amount))
    }
}

#[derive(Subcommand)]
enum WalletCommand {
    /// Mint funds into an account (the test-world faucet).
    Fund {
        #[command(flatten)]
        node: NodeArg,
        #[arg(long)]
        account: String,
        #[command(flatten)]
        amount: AmountArg,
    },
    ChangeRep {
        #[command(flatten)]
        node: NodeArg,
        #[arg(long)]
        account: String,
        #[arg(long)]
        rep: String,
    },
    Send {
        #[command(flatten)]
        node: NodeArg,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[command(flatten)]
        amount: AmountArg,
    },
    Receive {
        #[command(flatten)]
        node: NodeArg,
        #[arg(long)]
        account: String,
        /// Hash of the send block to pocket.
        #[arg(long)]
        hash: String,
    },
    /// Force a block's confirmation flag.
    Confirm {
        #[command(flatten)]
        node: NodeArg,
        #[arg(long)]
        hash: String,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        confirmed: bool,
    },
    /// Print account_info as JSON (read-only).
    Info {
        #[command(flatten)]
        node: NodeArg,
        #[arg(long)]
        account: String,
    },
}

fn address(text: &str) -> anyhow::Result<AccountAddress> {
    AccountAddress::decode(text).map_err(|e| anyhow!("bad address {text:?}: {}", e.code()))
}

fn block_hash(text: &str) -> anyhow::Result<BlockHash> {
    text.parse().map_err(|_| anyhow!("bad block hash {text:?}"))
}

fn parse_delay(text: &str) -> anyhow::Result<Option<Duration>> {
    match text {
        "never" => Ok(None),
        "0" => Ok(Some(Duration::ZERO)),
        other => humantime::parse_duration(other)
            .map(Some)
            .with_context(|| format!("bad confirmation delay {other:?}")),
    }
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

async fn serve(config: Option<PathBuf>) -> anyhow::Result<()> {
    let config = xnogate_service::load_config(config.as_deref()).context("configuration")?;
    let node = Arc::new(RpcClient::new(config.node_url.clone())?);
    let service = GateService::open(&config, node, Arc::new(SystemClock)).context("startup")?;
    let report = service.recovery().clone();
    tracing::info!(
        sessions = report.sessions,
        consumed = report.consumed_hashes,
        torn = report.torn_lines_dropped,
        "recovered state"
    );
    let reachable = service.state().node_reachable().await;
    if reachable {
        tracing::info!(node = %config.node_url, "node health probe: reachable");
    } else {
        tracing::warn!(node = %config.node_url, "node health probe: unreachable");
    }
    let listener = tokio::net::TcpListener::bind(config.listen_addr)
        .await
        .with_context(|| format!("bind {}", config.listen_addr))?;
    println!("listening on http://{}", listener.local_addr()?);
    service.serve(listener, shutdown_signal()).await?;
    tracing::info!("drained, exiting");
    Ok(())
}

async fn mocknode(listen: SocketAddr, admin: bool, delay: &str) -> anyhow::Result<()> {
    let delay = parse_delay(delay)?;
    let ledger = Arc::new(SimLedger::new());
    ledger.set_confirmation_delay(delay);
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .with_context(|| format!("bind {listen}"))?;
    println!("listening on http://{}/", listener.local_addr()?);
    xnogate_rpc::mock_node::serve(
        listener,
        Arc::new(MockNode::new(ledger, admin)),
        shutdown_signal(),
    )
    .await?;
    Ok(())
}

async fn wallet(cmd: WalletCommand) -> anyhow::Result<String> {
    let hash = match cmd {
        WalletCommand::Fund {
            node,
            account,
            amount,
        } => {
            SimWallet::new(node.node)
                .mint(&address(&account)?, amount.parse()?)
                .await?
        }
        WalletCommand::ChangeRep { node, account, rep } => {
            SimWallet::new(node.node)
                .change_representative(&address(&account)?, &address(&rep)?)
                .await?
        }
        WalletCommand::Send {
            node,
            from,
            to,
            amount,
        } => {
            SimWallet::new(node.node)
                .send(&address(&from)?, &address(&to)?, amount.parse()?)
                .await?
        }
        WalletCommand::Receive {
            node,
            account,
            hash,
        } => {
            SimWallet::new(node.node)
                .receive(&address(&account)?, &block_hash(&hash)?)
                .await?
        }
        WalletCommand::Confirm {
            node,
            hash,
            confirmed,
        } => {
            SimWallet::new(node.node)
                .set_confirmed(&block_hash(&hash)?, confirmed)
                .await?;
            return Ok("OK".into());
        }
        WalletCommand::Info { node, account } => {
            let client = RpcClient::new(node.node)?;
            let info = client
                .fetch_account_info(&address(&account)?)
                .await?
                .ok_or_else(|| anyhow!("account not found"))?;
            return Ok(serde_json::json!({
                "frontier": info.frontier.to_string(),
                "balance": info.balance.to_string(),
                "block_count": info.block_count,
                "representative": info.representative.to_string(),
                "confirmation_height": info.confirmation_height,
            })
            .to_string());
        }
    };
    Ok(hash.to_string())
}

async fn run(cli: Cli) -> anyhow::Result<String> {
    match cli.command {
        Command::Serve { config } => serve(config).await.map(|_| "OK".into()),
        Command::Mocknode {
            listen,
            admin,
            confirmation_delay,
        } => mocknode(listen, admin, &confirmation_delay)
            .await
            .map(|_| "OK".into()),
        Command::Wallet(cmd) => wallet(cmd).await,
        Command::E2e(args) => e2e::run(args).await,
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    match run(Cli::parse()).await {
        Ok(last) => {
            println!("{last}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

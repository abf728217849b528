//! Scripted run of the six gate steps from a fresh simulated wallet.

use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context};
use clap::Args;
use rand::Rng;
use reqwest::StatusCode;
use serde_json::{json, Value};
use xnogate_core::{AccountAddress, RawAmount};
use xnogate_rpc::SimWallet;

#[derive(Args)]
pub struct E2eArgs {
    /// Gate base URL.
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    gate: String,
    /// Mock node URL (admin enabled).
    #[arg(long, env = "GATE_NODE_URL", default_value = super::DEFAULT_NODE)]
    node: String,
    /// Stop before paying; payment verification then fails with 402.
    #[arg(long)]
    skip_payment: bool,
    /// How long to keep retrying while the payment is unconfirmed.
    #[arg(long, default_value = "10s", value_parser = humantime::parse_duration)]
    confirm_wait: Duration,
    #[arg(long, default_value = "pay per search")]
    query: String,
}

struct Gate {
    base: String,
    http: reqwest::Client,
}

impl Gate {
    async fn call(&self, req: reqwest::RequestBuilder) -> anyhow::Result<(StatusCode, Value)> {
        let resp = req.send().await.context("gate request")?;
        let status = resp.status();
        let body = resp.json().await.context("gate response body")?;
        Ok((status, body))
    }

    async fn post(&self, path: &str, body: Option<Value>) -> anyhow::Result<(StatusCode, Value)> {
        let mut req = self.http.post(format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.json(&b);
        }
        self.call(req).await
    }
}

fn text<'a>(v: &'a Value, key: &str) -> anyhow::Result<&'a str> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| anyhow!("gate response missing {key}: {v}"))
}

pub async fn run(args: E2eArgs) -> anyhow::Result<String> {
    let started = Instant::now();
    let gate = Gate {
        base: args.gate.trim_end_matches('/').to_string(),
        http: reqwest::Client::new(),
    };
    let wallet = SimWallet::new(args.node.clone());
    let payer = AccountAddress::from_public_key(rand::thread_rng().gen());

    wallet
        .mint(&payer, RawAmount::new(1))
        .await
        .context("open test wallet")?;
    println!("[0/6] opened test wallet {payer}");

    let (status, session) = gate
        .post("/v1/sessions", Some(json!({"account": payer.to_string()})))
        .await?;
    if status != StatusCode::CREATED {
        bail!("create session: {status} {session}");
    }
    let id = text(&session, "session_id")?.to_string();
    println!("[1/6] wallet connected: session {id}");
    println!(
        "[2/6] gate recorded payer history at height {}",
        session["frontier_height_at_creation"]
    );

    let challenge: AccountAddress = text(&session, "challenge_representative")?.parse()?;
    let change = wallet.change_representative(&payer, &challenge).await?;
    println!("[3/6] representative changed to {challenge} (block {change})");

    let (status, view) = gate
        .post(&format!("/v1/sessions/{id}/ownership/verify"), None)
        .await?;
    if status != StatusCode::OK {
        bail!("verify ownership: {status} {view}");
    }
    println!(
        "[4/6] ownership verified; pay {}",
        text(&view, "payment_uri")?
    );

    if args.skip_payment {
        println!("[5/6] payment skipped");
    } else {
        let price: RawAmount = text(&view, "amount_raw")?.parse()?;
        let deposit: AccountAddress = text(&view, "deposit_account")?.parse()?;
        wallet
            .mint(&payer, price)
            .await
            .context("top up test wallet")?;
        let send = wallet.send(&payer, &deposit, price).await?;
        println!("[5/6] sent {price} raw to {deposit} (block {send})");
    }

    let deadline = Instant::now() + args.confirm_wait;
    let granted = loop {
        let (status, body) = gate
            .post(&format!("/v1/sessions/{id}/payment/verify"), None)
            .await?;
        match status {
            StatusCode::OK => break body,
            StatusCode::PAYMENT_REQUIRED
                if body["error"] == "unconfirmed_payment" && Instant::now() < deadline =>
            {
                tokio::time::sleep(Duration::from_millis(200)).await;
            }
            _ => bail!("verify payment: {status} {body}"),
        }
    };
    let token = text(&granted, "access_token")?.to_string();

    let (status, result) = gate
        .call(
            gate.http
                .get(format!("{}/v1/protected/search", gate.base))
                .query(&[("q", args.query.as_str())])
                .bearer_auth(&token),
        )
        .await?;
    if status != StatusCode::OK {
        bail!("protected call: {status} {result}");
    }
    println!(
        "[6/6] payment verified; protected search -> {} {result}",
        status.as_u16()
    );
    println!("done in {} ms", started.elapsed().as_millis());
    Ok(token)
}

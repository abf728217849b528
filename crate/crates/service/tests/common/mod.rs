#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use serde_json::Value;
use tokio::sync::oneshot;
use xnogate_core::{AccountAddress, ManualClock, RawAmount, SimLedger};
use xnogate_rpc::{MockNodeHandle, RpcClient, SimWallet};
use xnogate_service::{GateConfig, GateService};

pub const PRICE: u128 = 1_000_000;
pub const START: u64 = 1_700_000_000;

pub fn acct(n: u8) -> AccountAddress {
    AccountAddress::from_public_key([n; 32])
}

pub fn deposit() -> AccountAddress {
    acct(0xD0)
}

pub fn config(data_dir: &Path, node_url: &str) -> GateConfig {
    GateConfig {
        listen_addr: "127.0.0.1:0".parse().unwrap(),
        node_url: node_url.into(),
        deposit_account: deposit(),
        price: RawAmount::new(PRICE),
        token_secret: vec![0x5A; 32],
        session_ttl_secs: 900,
        token_ttl_secs: 600,
        require_confirmation: true,
        data_dir: data_dir.to_path_buf(),
        cors_origins: vec![],
    }
}

pub struct RunningGate {
    pub base: String,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl RunningGate {
    pub async fn start(
        config: &GateConfig,
        clock: Arc<ManualClock>,
    ) -> Result<Self, xnogate_service::StartupError> {
        let node = Arc::new(RpcClient::new(config.node_url.clone()).unwrap());
        let service = GateService::open(config, node, clock)?;
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (stop, stopped) = oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            service
                .serve(listener, async {
                    let _ = stopped.await;
                })
                .await
                .unwrap();
        });
        Ok(RunningGate {
            base,
            stop: Some(stop),
            task,
        })
    }

    /// Stops serving and waits until the service (and its log handles) is gone.
    pub async fn stop(mut self) {
        self.stop_in_place().await;
    }

    pub async fn stop_in_place(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
            (&mut self.task).await.unwrap();
        }
    }
}

pub struct World {
    pub ledger: Arc<SimLedger>,
    pub node: MockNodeHandle,
    pub wallet: SimWallet,
    pub clock: Arc<ManualClock>,
    pub dir: tempfile::TempDir,
    pub config: GateConfig,
    pub gate: RunningGate,
    pub http: reqwest::Client,
}

impl World {
    pub async fn new() -> Self {
        Self::with(|_| {}).await
    }

    pub async fn with(tweak: impl FnOnce(&mut GateConfig)) -> Self {
        let ledger = Arc::new(SimLedger::new());
        let node = MockNodeHandle::spawn(ledger.clone(), true).await.unwrap();
        let wallet = SimWallet::new(node.url());
        let clock = Arc::new(ManualClock::at_unix(START));
        let dir = tempfile::tempdir().unwrap();
        let mut config = config(dir.path(), &node.url());
        tweak(&mut config);
        let gate = RunningGate::start(&config, clock.clone()).await.unwrap();
        World {
            ledger,
            node,
            wallet,
            clock,
            dir,
            config,
            gate,
            http: reqwest::Client::new(),
        }
    }

    /// Stops the gate, then starts a new one from the same data directory.
    pub async fn restart(&mut self) {
        self.gate.stop_in_place().await;
        self.gate = RunningGate::start(&self.config, self.clock.clone())
            .await
            .unwrap();
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.gate.base, path)
    }

    pub async fn post(&self, path: &str, body: Option<Value>) -> (u16, Value) {
        let mut req = self.http.post(self.url(path));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap())
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let resp = self.http.get(self.url(path)).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap())
    }

    pub async fn search(&self, token: Option<&str>, q: &str) -> (u16, Value) {
        let mut req = self
            .http
            .get(self.url("/v1/protected/search"))
            .query(&[("q", q)]);
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap())
    }

    pub async fn fund(&self, who: &AccountAddress, raw: u128) {
        self.wallet.mint(who, RawAmount::new(raw)).await.unwrap();
    }

    pub async fn create(&self, who: &AccountAddress) -> Value {
        let (status, body) = self
            .post(
                "/v1/sessions",
                Some(serde_json::json!({"account": who.to_string()})),
            )
            .await;
        assert_eq!(status, 201, "{body}");
        body
    }

    /// Sets the challenge representative and verifies ownership.
    pub async fn prove(&self, who: &AccountAddress, session: &Value) {
        let rep: AccountAddress = session["challenge_representative"]
            .as_str()
            .unwrap()
            .parse()
            .unwrap();
        self.wallet.change_representative(who, &rep).await.unwrap();
        let id = session["session_id"].as_str().unwrap();
        let (status, body) = self
            .post(&format!("/v1/sessions/{id}/ownership/verify"), None)
            .await;
        assert_eq!(status, 200, "{body}");
    }

    pub async fn pay(&self, who: &AccountAddress, raw: u128) -> xnogate_core::BlockHash {
        self.wallet
            .send(who, &deposit(), RawAmount::new(raw))
            .await
            .unwrap()
    }

    pub async fn verify_payment(&self, session: &Value) -> (u16, Value) {
        let id = session["session_id"].as_str().unwrap();
        self.post(&format!("/v1/sessions/{id}/payment/verify"), None)
            .await
    }
}

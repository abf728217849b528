#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, ExitStatus, Output, Stdio};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

pub const BIN: &str = env!("CARGO_BIN_EXE_gate");
pub const DEPOSIT: &str = "nano_1111111111111111111111111111111111111111111111111111hifc8npp";
pub const PRICE_RAW: &str = "1000000000000000000000000";

/// A long-running `gate` subcommand that prints "listening on URL" when ready.
pub struct Proc {
    child: Child,
    pub url: String,
    pub stdout: Arc<Mutex<Vec<String>>>,
}

impl Proc {
    pub fn spawn(args: &[&str], envs: &[(&str, String)]) -> Proc {
        let mut cmd = Command::new(BIN);
        cmd.args(args)
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .env("RUST_LOG", "warn");
        for (k, v) in envs {
            cmd.env(k, v);
        }
        let mut child = cmd.spawn().expect("spawn gate binary");
        let stdout = child.stdout.take().unwrap();
        let lines = Arc::new(Mutex::new(vec![]));
        let (tx, rx) = mpsc::channel();
        let sink = lines.clone();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines().map_while(Result::ok) {
                if let Some(url) = line.strip_prefix("listening on ") {
                    let _ = tx.send(url.to_string());
                }
                sink.lock().unwrap().push(line);
            }
        });
        let url = match rx.recv_timeout(Duration::from_secs(20)) {
            Ok(url) => url,
            Err(_) => {
                let _ = child.kill();
                let out = child.wait_with_output().unwrap();
                panic!(
                    "{args:?} did not start: {}",
                    String::from_utf8_lossy(&out.stderr)
                );
            }
        };
        Proc {
            child,
            url,
            stdout: lines,
        }
    }

    fn signal(&mut self, sig: &str) -> ExitStatus {
        Command::new("kill")
            .args([sig, &self.child.id().to_string()])
            .status()
            .unwrap();
        self.child.wait().unwrap()
    }

    pub fn interrupt(&mut self) -> ExitStatus {
        self.signal("-INT")
    }

    pub fn kill_hard(&mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Proc {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn mocknode(extra: &[&str]) -> Proc {
    let mut args = vec!["mocknode", "--listen", "127.0.0.1:0"];
    args.extend_from_slice(extra);
    Proc::spawn(&args, &[])
}

pub fn gate_env(node_url: &str, data_dir: &Path) -> Vec<(&'static str, String)> {
    vec![
        ("GATE_LISTEN_ADDR", "127.0.0.1:0".into()),
        ("GATE_NODE_URL", node_url.into()),
        ("GATE_DEPOSIT_ACCOUNT", DEPOSIT.into()),
        ("GATE_PRICE_RAW", PRICE_RAW.into()),
        ("GATE_TOKEN_SECRET", "5a".repeat(32)),
        ("GATE_DATA_DIR", data_dir.display().to_string()),
    ]
}

pub fn serve(node_url: &str, data_dir: &Path) -> Proc {
    Proc::spawn(&["serve"], &gate_env(node_url, data_dir))
}

/// Runs a short-lived `gate` command to completion.
pub fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run gate binary")
}

pub fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(String::from)
        .collect()
}

pub fn last_line(out: &Output) -> String {
    stdout_lines(out).last().cloned().unwrap_or_default()
}

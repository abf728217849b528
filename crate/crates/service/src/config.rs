//! Gate configuration: a JSON file of key/value pairs, overridden by `GATE_*`
//! environment variables. Everything is validated before the gate listens.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use xnogate_core::{AccountAddress, GateSettings, RawAmount};

pub const MIN_SECRET_BYTES: usize = 32;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {message}")]
    Unreadable { path: PathBuf, message: String },
    #[error("invalid {field}: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
    #[error("missing required setting {0}")]
    Missing(&'static str),
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Clone)]
pub struct GateConfig {
    pub listen_addr: SocketAddr,
    pub node_url: String,
    pub deposit_account: AccountAddress,
    pub price: RawAmount,
    pub token_secret: Vec<u8>,
    pub session_ttl_secs: u64,
    pub token_ttl_secs: u64,
    pub require_confirmation: bool,
    pub data_dir: PathBuf,
    /// Origins allowed to call the API from a browser. Empty means same origin only.
    pub cors_origins: Vec<String>,
}

impl std::fmt::Debug for GateConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GateConfig")
            .field("listen_addr", &self.listen_addr)
            .field("node_url", &self.node_url)
            .field("deposit_account", &self.deposit_account)
            .field("price", &self.price)
            .field("token_secret", &"<redacted>")
            .field("session_ttl_secs", &self.session_ttl_secs)
            .field("token_ttl_secs", &self.token_ttl_secs)
            .field("require_confirmation", &self.require_confirmation)
            .field("data_dir", &self.data_dir)
            .field("cors_origins", &self.cors_origins)
            .finish()
    }
}

impl GateConfig {
    pub fn settings(&self) -> GateSettings {
        let mut s = GateSettings::new(self.deposit_account, self.price, self.token_secret.clone());
        s.session_ttl_secs = self.session_ttl_secs;
        s.token_ttl_secs = self.token_ttl_secs;
        s.require_confirmation = self.require_confirmation;
        s
    }
}

/// File form. Every value may also be written as a string, matching the env vars.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    listen_addr: Option<String>,
    node_url: Option<String>,
    deposit_account: Option<String>,
    price_raw: Option<Scalar>,
    token_secret: Option<String>,
    session_ttl_secs: Option<Scalar>,
    token_ttl_secs: Option<Scalar>,
    require_confirmation: Option<Scalar>,
    data_dir: Option<String>,
    cors_origins: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Text(String),
    Number(u64),
    Bool(bool),
}

impl Scalar {
    fn into_text(self) -> String {
        match self {
            Scalar::Text(s) => s,
            Scalar::Number(n) => n.to_string(),
            Scalar::Bool(b) => b.to_string(),
        }
    }
}

/// Loads `path` (if any) and applies overrides from the process environment.
pub fn load_config(path: Option<&Path>) -> Result<GateConfig, ConfigError> {
    load_config_with(path, |key| std::env::var(key).ok())
}

/// Same as [`load_config`] with an explicit environment lookup.
pub fn load_config_with(
    path: Option<&Path>,
    env: impl Fn(&str) -> Option<String>,
) -> Result<GateConfig, ConfigError> {
    let file = match path {
        None => FileConfig::default(),
        Some(p) => {
            let unreadable = |message: String| ConfigError::Unreadable {
                path: p.to_path_buf(),
                message,
            };
            let text = std::fs::read_to_string(p).map_err(|e| unreadable(e.to_string()))?;
            serde_json::from_str(&text).map_err(|e| unreadable(e.to_string()))?
        }
    };
    let pick = |var: &str, from_file: Option<String>| env(var).or(from_file);

    let listen_addr = pick("GATE_LISTEN_ADDR", file.listen_addr)
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()
        .map_err(|e| invalid("listen_addr", format!("{e}")))?;

    let node_url =
        pick("GATE_NODE_URL", file.node_url).unwrap_or_else(|| "http://127.0.0.1:7076/".into());
    if !(node_url.starts_with("http://") || node_url.starts_with("https://")) {
        return Err(invalid("node_url", "must be an http(s) URL"));
    }

    let deposit_text = pick("GATE_DEPOSIT_ACCOUNT", file.deposit_account)
        .ok_or(ConfigError::Missing("deposit_account"))?;
    let deposit_account =
        AccountAddress::decode(&deposit_text).map_err(|e| invalid("deposit_account", e.code()))?;

    let price_text = pick("GATE_PRICE_RAW", file.price_raw.map(Scalar::into_text))
        .ok_or(ConfigError::Missing("price_raw"))?;
    let price: RawAmount = price_text
        .parse()
        .map_err(|_| invalid("price_raw", "must be a decimal raw amount"))?;
    if price.is_zero() {
        return Err(invalid("price_raw", "must be greater than zero"));
    }

    let secret_hex =
        pick("GATE_TOKEN_SECRET", file.token_secret).ok_or(ConfigError::Missing("token_secret"))?;
    let token_secret =
        hex::decode(secret_hex.trim()).map_err(|_| invalid("token_secret", "must be hex"))?;
    if token_secret.len() < MIN_SECRET_BYTES {
        return Err(invalid(
            "token_secret",
            format!(
                "{} bytes, need at least {MIN_SECRET_BYTES}",
                token_secret.len()
            ),
        ));
    }

    let seconds = |field: &'static str,
                   var: &str,
                   from_file: Option<Scalar>,
                   default: u64|
     -> Result<u64, ConfigError> {
        match pick(var, from_file.map(Scalar::into_text)) {
            None => Ok(default),
            Some(t) => match t.parse::<u64>() {
                Ok(0) => Err(invalid(field, "must be greater than zero")),
                Ok(n) => Ok(n),
                Err(_) => Err(invalid(field, "must be a whole number of seconds")),
            },
        }
    };
    let session_ttl_secs = seconds(
        "session_ttl_secs",
        "GATE_SESSION_TTL_SECS",
        file.session_ttl_secs,
        GateSettings::DEFAULT_SESSION_TTL_SECS,
    )?;
    let token_ttl_secs = seconds(
        "token_ttl_secs",
        "GATE_TOKEN_TTL_SECS",
        file.token_ttl_secs,
        GateSettings::DEFAULT_TOKEN_TTL_SECS,
    )?;

    let require_confirmation = match pick(
        "GATE_REQUIRE_CONFIRMATION",
        file.require_confirmation.map(Scalar::into_text),
    ) {
        None => true,
        Some(t) => match t.as_str() {
            "true" | "1" => true,
            "false" | "0" => false,
            _ => return Err(invalid("require_confirmation", "must be true or false")),
        },
    };

    let data_dir =
        PathBuf::from(pick("GATE_DATA_DIR", file.data_dir).unwrap_or_else(|| "gate-data".into()));

    let cors_origins = match env("GATE_CORS_ORIGINS") {
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect(),
        None => file.cors_origins.unwrap_or_default(),
    };

    Ok(GateConfig {
        listen_addr,
        node_url,
        deposit_account,
        price,
        token_secret,
        session_ttl_secs,
        token_ttl_secs,
        require_confirmation,
        data_dir,
        cors_origins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use std::io::Write;

    const DEPOSIT: &str = "nano_1111111111111111111111111111111111111111111111111111hifc8npp";

    fn secret() -> String {
        "ab".repeat(32)
    }

    fn env_of(pairs: &[(&str, String)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        move |k| map.get(k).cloned()
    }

    fn base_env() -> Vec<(&'static str, String)> {
        vec![
            ("GATE_DEPOSIT_ACCOUNT", DEPOSIT.into()),
            ("GATE_PRICE_RAW", "1000".into()),
            ("GATE_TOKEN_SECRET", secret()),
        ]
    }

    fn with(overrides: &[(&'static str, &str)]) -> Result<GateConfig, ConfigError> {
        let mut pairs = base_env();
        for (k, v) in overrides {
            pairs.retain(|(key, _)| key != k);
            pairs.push((k, v.to_string()));
        }
        load_config_with(None, env_of(&pairs))
    }

    #[test]
    fn env_only_with_defaults() {
        let c = with(&[]).unwrap();
        assert_eq!(c.price, RawAmount::new(1000));
        assert_eq!(c.session_ttl_secs, 900);
        assert_eq!(c.token_ttl_secs, 600);
        assert!(c.require_confirmation);
        assert!(c.cors_origins.is_empty());
    }

    #[test]
    fn zero_price_is_rejected() {
        assert!(matches!(
            with(&[("GATE_PRICE_RAW", "0")]),
            Err(ConfigError::Invalid {
                field: "price_raw",
                ..
            })
        ));
    }

    #[test]
    fn short_secret_is_rejected() {
        let short = "ab".repeat(31);
        assert!(matches!(
            with(&[("GATE_TOKEN_SECRET", &short)]),
            Err(ConfigError::Invalid {
                field: "token_secret",
                ..
            })
        ));
        assert!(matches!(
            with(&[("GATE_TOKEN_SECRET", "zz")]),
            Err(ConfigError::Invalid {
                field: "token_secret",
                ..
            })
        ));
    }

    #[test]
    fn bad_deposit_is_rejected() {
        let mut bad = DEPOSIT.to_string();
        bad.replace_range(10..11, "3");
        match with(&[("GATE_DEPOSIT_ACCOUNT", &bad)]) {
            Err(ConfigError::Invalid {
                field: "deposit_account",
                message,
            }) => assert_eq!(message, "checksum_mismatch"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_fields_are_named() {
        assert!(matches!(
            load_config_with(None, |_| None),
            Err(ConfigError::Missing("deposit_account"))
        ));
    }

    #[test]
    fn env_overrides_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(
            f,
            r#"{{"deposit_account":"{DEPOSIT}","price_raw":"5","token_secret":"{}","session_ttl_secs":60,
               "require_confirmation":false,"cors_origins":["http://localhost:5173"]}}"#,
            secret()
        )
        .unwrap();
        let c = load_config_with(Some(f.path()), |_| None).unwrap();
        assert_eq!(c.price, RawAmount::new(5));
        assert_eq!(c.session_ttl_secs, 60);
        assert!(!c.require_confirmation);
        assert_eq!(c.cors_origins, vec!["http://localhost:5173".to_string()]);

        let c =
            load_config_with(Some(f.path()), env_of(&[("GATE_PRICE_RAW", "7".into())])).unwrap();
        assert_eq!(c.price, RawAmount::new(7));
        assert_eq!(c.session_ttl_secs, 60);
    }

    #[test]
    fn unknown_file_keys_fail() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"price":"5"}}"#).unwrap();
        assert!(matches!(
            load_config_with(Some(f.path()), |_| None),
            Err(ConfigError::Unreadable { .. })
        ));
    }

    #[test]
    fn secret_is_not_printed() {
        let c = with(&[]).unwrap();
        assert!(!format!("{c:?}").contains(&secret()));
    }
}

use std::fmt;
use std::str::FromStr;

use blake2::digest::consts::U5;
use blake2::{Blake2b, Digest};
use thiserror::Error;

use super::serde_via_str;

/// Nano base32 alphabet (no `0`, `2`, `l`, `v`).
pub const ADDRESS_ALPHABET: &[u8; 32] = b"13456789abcdefghijkmnopqrstuwxyz";

const PREFIX: &str = "nano_";
const LEGACY_PREFIX: &str = "xrb_";
const KEY_CHARS: usize = 52;
const CHECKSUM_CHARS: usize = 8;
const BODY_CHARS: usize = KEY_CHARS + CHECKSUM_CHARS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AddressError {
    #[error("public key must be 32 bytes, got {0}")]
    WrongKeyLength(usize),
    #[error("address must start with nano_ or xrb_")]
    InvalidPrefix,
    #[error("address body must be 60 characters")]
    InvalidLength,
    #[error("address contains a character outside the base32 alphabet")]
    InvalidCharacter,
    #[error("address checksum does not match its public key")]
    ChecksumMismatch,
}

impl AddressError {
    /// Stable machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            AddressError::WrongKeyLength(_) => "wrong_length",
            AddressError::InvalidPrefix => "invalid_prefix",
            AddressError::InvalidLength => "invalid_length",
            AddressError::InvalidCharacter => "invalid_character",
            AddressError::ChecksumMismatch => "checksum_mismatch",
        }
    }
}

/// A Nano account, identified by its 32-byte public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AccountAddress([u8; 32]);

impl AccountAddress {
    pub const fn from_public_key(key: [u8; 32]) -> Self {
        AccountAddress(key)
    }

    /// Builds an address from a byte slice that must be exactly 32 bytes long.
    pub fn from_key_slice(key: &[u8]) -> Result<Self, AddressError> {
        let key: [u8; 32] = key
            .try_into()
            .map_err(|_| AddressError::WrongKeyLength(key.len()))?;
        Ok(AccountAddress(key))
    }

    pub fn public_key(&self) -> &[u8; 32] {
        &self.0
    }

    /// Canonical `nano_` text.
    pub fn encode(&self) -> String {
        let mut out = String::with_capacity(PREFIX.len() + BODY_CHARS);
        out.push_str(PREFIX);
        push_base32(&mut out, &self.0);
        push_base32(&mut out, &checksum(&self.0));
        out
    }

    /// Parses `nano_` or legacy `xrb_` text, verifying alphabet and checksum.
    pub fn decode(text: &str) -> Result<Self, AddressError> {
        let body = text
            .strip_prefix(PREFIX)
            .or_else(|| text.strip_prefix(LEGACY_PREFIX))
            .ok_or(AddressError::InvalidPrefix)?;
        if body.len() != BODY_CHARS {
            return Err(AddressError::InvalidLength);
        }
        let values = body
            .bytes()
            .map(char_value)
            .collect::<Option<Vec<u8>>>()
            .ok_or(AddressError::InvalidCharacter)?;
        let (key_part, sum_part) = values.split_at(KEY_CHARS);

        // Non-zero padding bits mean the text is not the encoding of any key,
        // which is reported the same way as a failed integrity check.
        let key: [u8; 32] = read_base32(key_part)
            .ok_or(AddressError::ChecksumMismatch)?
            .try_into()
            .expect("52 chars carry 32 bytes");
        let sum = read_base32(sum_part).ok_or(AddressError::ChecksumMismatch)?;
        if sum[..] != checksum(&key) {
            return Err(AddressError::ChecksumMismatch);
        }
        Ok(AccountAddress(key))
    }
}

/// 5-byte BLAKE2b digest of the key, byte-reversed.
fn checksum(key: &[u8; 32]) -> [u8; 5] {
    let mut sum: [u8; 5] = Blake2b::<U5>::digest(key).into();
    sum.reverse();
    sum
}

fn char_value(c: u8) -> Option<u8> {
    ADDRESS_ALPHABET
        .iter()
        .position(|&a| a == c)
        .map(|p| p as u8)
}

/// Appends `data` as a big-endian bit string, left-padded with zeros to a
/// multiple of five bits.
fn push_base32(out: &mut String, data: &[u8]) {
    let bits = data.len() * 8;
    let chars = bits.div_ceil(5);
    let pad = chars * 5 - bits;
    for i in 0..chars {
        let mut v = 0u8;
        for b in 0..5 {
            let pos = i * 5 + b;
            let bit = if pos < pad {
                0
            } else {
                let g = pos - pad;
                (data[g / 8] >> (7 - g % 8)) & 1
            };
            v = (v << 1) | bit;
        }
        out.push(ADDRESS_ALPHABET[v as usize] as char);
    }
}

/// Inverse of `push_base32`; `None` when a padding bit is set.
fn read_base32(values: &[u8]) -> Option<Vec<u8>> {
    let bits = values.len() * 5;
    let bytes = bits / 8;
    let pad = bits - bytes * 8;
    let mut out = vec![0u8; bytes];
    for (i, &v) in values.iter().enumerate() {
        for b in 0..5 {
            let bit = (v >> (4 - b)) & 1;
            let pos = i * 5 + b;
            if pos < pad {
                if bit != 0 {
                    return None;
                }
            } else {
                let g = pos - pad;
                out[g / 8] |= bit << (7 - g % 8);
            }
        }
    }
    Some(out)
}

impl fmt::Display for AccountAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl fmt::Debug for AccountAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AccountAddress({})", self.encode())
    }
}

impl FromStr for AccountAddress {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AccountAddress::decode(s)
    }
}

serde_via_str!(AccountAddress);

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::serde_via_str;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("block hash must be exactly 64 hex characters")]
pub struct HashParseError;

/// 32-byte block identifier, rendered as 64 uppercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BlockHash([u8; 32]);

impl BlockHash {
    pub const ZERO: BlockHash = BlockHash([0; 32]);

    pub const fn from_bytes(bytes: [u8; 32]) -> Self {
        BlockHash(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 32]
    }
}

impl fmt::Display for BlockHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode_upper(self.0))
    }
}

impl fmt::Debug for BlockHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlockHash({self})")
    }
}

impl FromStr for BlockHash {
    type Err = HashParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 64 {
            return Err(HashParseError);
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| HashParseError)?;
        Ok(BlockHash(out))
    }
}

serde_via_str!(BlockHash);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let text = "AB".repeat(32);
        let h: BlockHash = text.to_lowercase().parse().unwrap();
        assert_eq!(h.to_string(), text);
        assert_eq!("AB".repeat(31).parse::<BlockHash>(), Err(HashParseError));
        assert_eq!(
            format!("{}G", "A".repeat(63)).parse::<BlockHash>(),
            Err(HashParseError)
        );
        assert_eq!("A".repeat(65).parse::<BlockHash>(), Err(HashParseError));
    }
}

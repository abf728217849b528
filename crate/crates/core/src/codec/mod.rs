//! Canonical text forms shared by every wire message and persisted record:
//! `nano_` addresses, decimal raw amounts and uppercase hex block hashes.

mod address;
mod amount;
mod hash;

pub use address::{AccountAddress, AddressError, ADDRESS_ALPHABET};
pub use amount::{AmountError, RawAmount, RAW_PER_XNO};
pub use hash::{BlockHash, HashParseError};

/// Implements `Serialize`/`Deserialize` through `Display`/`FromStr`.
macro_rules! serde_via_str {
    ($ty:ty) => {
        impl serde::Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> serde::Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}
pub(crate) use serde_via_str;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::serde_via_str;

/// Raw units per XNO.
pub const RAW_PER_XNO: u128 = 10u128.pow(30);
const XNO_DECIMALS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AmountError {
    #[error("amount exceeds 2^128 - 1 raw")]
    Overflow,
    #[error("amount would go below zero")]
    Underflow,
    #[error("more than 30 fractional digits")]
    TooManyFractionDigits,
    #[error("malformed amount")]
    Malformed,
}

/// Unsigned count of raw (10^-30 XNO). All arithmetic is checked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawAmount(u128);

impl RawAmount {
    pub const ZERO: RawAmount = RawAmount(0);

    pub const fn new(raw: u128) -> Self {
        RawAmount(raw)
    }

    pub const fn raw(self) -> u128 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, other: RawAmount) -> Result<RawAmount, AmountError> {
        self.0
            .checked_add(other.0)
            .map(RawAmount)
            .ok_or(AmountError::Overflow)
    }

    pub fn checked_sub(self, other: RawAmount) -> Result<RawAmount, AmountError> {
        self.0
            .checked_sub(other.0)
            .map(RawAmount)
            .ok_or(AmountError::Underflow)
    }

    /// Parses a decimal XNO quantity such as `"1"`, `"0.5"` or `".25"` exactly.
    pub fn from_xno_decimal(text: &str) -> Result<RawAmount, AmountError> {
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (text, None),
        };
        let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) {
            return Err(AmountError::Malformed);
        }
        let frac = frac_part.unwrap_or("");
        if frac_part.is_some() && frac.is_empty() {
            return Err(AmountError::Malformed);
        }
        if !all_digits(frac) || (int_part.is_empty() && frac.is_empty()) {
            return Err(AmountError::Malformed);
        }
        if frac.len() > XNO_DECIMALS {
            return Err(AmountError::TooManyFractionDigits);
        }

        let whole = parse_digits(int_part)?;
        let mut frac_raw = parse_digits(frac)?;
        frac_raw *= 10u128.pow((XNO_DECIMALS - frac.len()) as u32);
        whole
            .checked_mul(RAW_PER_XNO)
            .and_then(|w| w.checked_add(frac_raw))
            .map(RawAmount)
            .ok_or(AmountError::Overflow)
    }

    /// Exact decimal XNO rendering without trailing fractional zeros.
    pub fn to_xno_decimal(self) -> String {
        let whole = self.0 / RAW_PER_XNO;
        let frac = self.0 % RAW_PER_XNO;
        if frac == 0 {
            return whole.to_string();
        }
        let frac = format!("{frac:030}");
        format!("{whole}.{}", frac.trim_end_matches('0'))
    }
}

fn parse_digits(digits: &str) -> Result<u128, AmountError> {
    digits.bytes().try_fold(0u128, |acc, b| {
        acc.checked_mul(10)
            .and_then(|a| a.checked_add(u128::from(b - b'0')))
            .ok_or(AmountError::Overflow)
    })
}

impl From<u128> for RawAmount {
    fn from(raw: u128) -> Self {
        RawAmount(raw)
    }
}

impl fmt::Display for RawAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Decimal raw string; leading zeros are accepted, nothing else is.
impl FromStr for RawAmount {
    type Err = AmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(AmountError::Malformed);
        }
        parse_digits(s).map(RawAmount)
    }
}

serde_via_str!(RawAmount);

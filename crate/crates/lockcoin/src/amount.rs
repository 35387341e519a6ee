//! Fixed-point money arithmetic.
//!
//! All monetary values are 64-bit integer satoshis (10^-8 BTC). There is no
//! floating point anywhere in money handling; dimensionless rates (deposit
//! ratio, fee rate) are exact rationals so that products like `z*v` either
//! land on a whole satoshi or are rejected up front.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Satoshis per BTC.
pub const COIN: u64 = 100_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AmountError {
    #[error("malformed amount: {0}")]
    Malformed(String),
    #[error("amount has more than 8 decimal places: {0}")]
    TooPrecise(String),
    #[error("amount overflows: {0}")]
    Overflow(String),
    #[error("rate {rate} of {amount} is not a whole number of satoshis")]
    InexactProduct { rate: String, amount: String },
    #[error("denominator must be nonzero")]
    ZeroDenominator,
}

/// A non-negative amount in satoshis.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Amount(pub u64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub fn from_sats(sats: u64) -> Amount {
        Amount(sats)
    }

    pub fn sats(self) -> u64 {
        self.0
    }

    /// Parse a decimal BTC string ("0.1", "12", "0.00000001") to satoshis.
    pub fn from_btc_str(s: &str) -> Result<Amount, AmountError> {
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(AmountError::Malformed(s.into()));
        }
        if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(AmountError::Malformed(s.into()));
        }
        if frac.len() > 8 {
            return Err(AmountError::TooPrecise(s.into()));
        }
        let whole: u64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| AmountError::Overflow(s.into()))?
        };
        let mut frac_sats: u64 = 0;
        if !frac.is_empty() {
            frac_sats = frac.parse().map_err(|_| AmountError::Malformed(s.into()))?;
            frac_sats *= 10u64.pow(8 - frac.len() as u32);
        }
        whole
            .checked_mul(COIN)
            .and_then(|w| w.checked_add(frac_sats))
            .map(Amount)
            .ok_or_else(|| AmountError::Overflow(s.into()))
    }

    /// Render as a BTC decimal with exactly 8 fraction digits.
    pub fn to_btc_string(self) -> String {
        format!("{}.{:08}", self.0 / COIN, self.0 % COIN)
    }

    pub fn checked_add(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_add(rhs.0).map(Amount)
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }

    pub fn as_delta(self) -> i64 {
        self.0 as i64
    }
}

impl Add for Amount {
    type Output = Amount;
    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0.checked_add(rhs.0).expect("amount overflow"))
    }
}

impl AddAssign for Amount {
    fn add_assign(&mut self, rhs: Amount) {
        *self = *self + rhs;
    }
}

impl Sub for Amount {
    type Output = Amount;
    fn sub(self, rhs: Amount) -> Amount {
        Amount(self.0.checked_sub(rhs.0).expect("amount underflow"))
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} BTC", self.to_btc_string())
    }
}

/// An exact non-negative rational rate (deposit ratio z, fee rate rho).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    num: u64,
    den: u64,
}

impl Rate {
    pub const ZERO: Rate = Rate { num: 0, den: 1 };
    pub const ONE: Rate = Rate { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Rate, AmountError> {
        if den == 0 {
            return Err(AmountError::ZeroDenominator);
        }
        let g = gcd(num.max(1), den);
        Ok(Rate {
            num: num / g,
            den: den / g,
        })
    }

    /// Parse a decimal rate string ("2", "1.5", "0.01") as an exact rational.
    pub fn from_decimal_str(s: &str) -> Result<Rate, AmountError> {
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if (whole.is_empty() && frac.is_empty())
            || !whole.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(AmountError::Malformed(s.into()));
        }
        if frac.len() > 12 {
            return Err(AmountError::TooPrecise(s.into()));
        }
        let den = 10u64.pow(frac.len() as u32);
        let whole: u64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| AmountError::Overflow(s.into()))?
        };
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| AmountError::Malformed(s.into()))?
        };
        let num = whole
            .checked_mul(den)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(|| AmountError::Overflow(s.into()))?;
        Rate::new(num, den)
    }

    pub fn to_decimal_string(self) -> String {
        if self.den == 1 {
            return format!("{}", self.num);
        }
        // Denominators come from decimal parsing, so they are 2^a*5^b; widen
        // to the next power of ten and print exactly.
        let mut den = self.den;
        let mut digits = 0u32;
        while den % 10 == 0 {
            den /= 10;
            digits += 1;
        }
        while den % 2 == 0 {
            den /= 2;
            digits += 1;
        }
        while den % 5 == 0 {
            den /= 5;
            digits += 1;
        }
        if den == 1 {
            let scaled = self.num as u128 * 10u128.pow(digits) / self.den as u128;
            let whole = scaled / 10u128.pow(digits);
            let frac = scaled % 10u128.pow(digits);
            format!("{whole}.{frac:0width$}", width = digits as usize)
        } else {
            format!("{}/{}", self.num, self.den)
        }
    }

    /// Multiply an amount by this rate; errors unless the product is a whole
    /// number of satoshis.
    pub fn apply(self, amount: Amount) -> Result<Amount, AmountError> {
        let wide = amount.0 as u128 * self.num as u128;
        if wide % self.den as u128 != 0 {
            return Err(AmountError::InexactProduct {
                rate: self.to_decimal_string(),
                amount: amount.to_btc_string(),
            });
        }
        let sats = wide / self.den as u128;
        u64::try_from(sats)
            .map(Amount)
            .map_err(|_| AmountError::Overflow(amount.to_btc_string()))
    }

    pub fn gt_one(self) -> bool {
        self.num > self.den
    }

    pub fn lt_one(self) -> bool {
        self.num < self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_btc_strings() {
        assert_eq!(Amount::from_btc_str("0.1").unwrap(), Amount(10_000_000));
        assert_eq!(Amount::from_btc_str("1").unwrap(), Amount(COIN));
        assert_eq!(Amount::from_btc_str("0.00000001").unwrap(), Amount(1));
        assert_eq!(Amount::from_btc_str("0.0005").unwrap(), Amount(50_000));
        assert_eq!(
            Amount::from_btc_str("21.00000000").unwrap(),
            Amount(21 * COIN)
        );
    }

    #[test]
    fn rejects_bad_btc_strings() {
        assert!(Amount::from_btc_str("").is_err());
        assert!(Amount::from_btc_str(".").is_err());
        assert!(Amount::from_btc_str("1.2.3").is_err());
        assert!(Amount::from_btc_str("-1").is_err());
        assert!(Amount::from_btc_str("0.000000001").is_err());
        assert!(Amount::from_btc_str("abc").is_err());
    }

    #[test]
    fn formats_with_eight_decimals() {
        assert_eq!(Amount(10_000_000).to_btc_string(), "0.10000000");
        assert_eq!(Amount(0).to_btc_string(), "0.00000000");
        assert_eq!(Amount(COIN + 1).to_btc_string(), "1.00000001");
    }

    #[test]
    fn rate_products_are_exact() {
        let v = Amount::from_btc_str("0.1").unwrap();
        let z = Rate::from_decimal_str("2").unwrap();
        let rho = Rate::from_decimal_str("0.01").unwrap();
        assert_eq!(z.apply(v).unwrap(), Amount(20_000_000));
        assert_eq!(rho.apply(v).unwrap(), Amount(100_000));

        let z15 = Rate::from_decimal_str("1.5").unwrap();
        assert_eq!(z15.apply(v).unwrap(), Amount(15_000_000));
        // 1.5 * 1 sat is not a whole satoshi
        assert!(z15.apply(Amount(1)).is_err());
    }

    #[test]
    fn rate_comparisons() {
        assert!(Rate::from_decimal_str("1.5").unwrap().gt_one());
        assert!(!Rate::ONE.gt_one());
        assert!(Rate::from_decimal_str("0.01").unwrap().lt_one());
        assert!(Rate::ZERO.is_zero());
    }

    #[test]
    fn rate_display_round_trips() {
        for s in ["2", "1.5", "0.01", "0.0001", "3"] {
            let r = Rate::from_decimal_str(s).unwrap();
            assert_eq!(Rate::from_decimal_str(&r.to_decimal_string()).unwrap(), r);
        }
    }

    proptest! {
        #[test]
        fn btc_string_round_trip(sats in 0u64..=2_100_000_000_000_000u64) {
            let a = Amount(sats);
            prop_assert_eq!(Amount::from_btc_str(&a.to_btc_string()).unwrap(), a);
        }

        #[test]
        fn rate_apply_matches_wide_math(sats in 0u64..=10_000_000_000u64, num in 0u64..10_000, den in 1u64..10_000) {
            let r = Rate::new(num, den).unwrap();
            match r.apply(Amount(sats)) {
                Ok(a) => prop_assert_eq!(a.0 as u128, sats as u128 * num as u128 / den as u128),
                Err(_) => prop_assert_ne!(sats as u128 * num as u128 % den as u128, 0),
            }
        }
    }
}

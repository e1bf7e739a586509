use std::fmt;
use std::ops::{Add, AddAssign, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Registry key of an asset.
    AssetId
);
string_id!(
    /// Key of a base or joint market.
    MarketId
);
string_id!(AccountId);
string_id!(TradeId);

/// Money in integer euro cents.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Cents(pub i64);

impl Cents {
    pub const ZERO: Cents = Cents(0);

    pub fn from_euros(euros: i64) -> Self {
        Cents(euros * 100)
    }

    /// Value in euro as a real number, for market-maker arithmetic.
    pub fn to_euro(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}€{}.{:02}", abs / 100, abs % 100)
    }
}

impl Add for Cents {
    type Output = Cents;
    fn add(self, rhs: Cents) -> Cents {
        Cents(self.0 + rhs.0)
    }
}

impl Sub for Cents {
    type Output = Cents;
    fn sub(self, rhs: Cents) -> Cents {
        Cents(self.0 - rhs.0)
    }
}

impl AddAssign for Cents {
    fn add_assign(&mut self, rhs: Cents) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Cents {
    fn sub_assign(&mut self, rhs: Cents) {
        self.0 -= rhs.0;
    }
}

impl std::iter::Sum for Cents {
    fn sum<I: Iterator<Item = Cents>>(iter: I) -> Cents {
        Cents(iter.map(|c| c.0).sum())
    }
}

/// Seconds since the Unix epoch. The simulator uses round numbers instead.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Side of a binary higher/lower security.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Higher,
    Lower,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Higher, Outcome::Lower];

    pub fn index(self) -> usize {
        match self {
            Outcome::Higher => 0,
            Outcome::Lower => 1,
        }
    }

    pub fn opposite(self) -> Outcome {
        match self {
            Outcome::Higher => Outcome::Lower,
            Outcome::Lower => Outcome::Higher,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Higher => "HIGHER",
            Outcome::Lower => "LOWER",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown outcome `{0}`")]
pub struct ParseOutcomeError(pub String);

impl FromStr for Outcome {
    type Err = ParseOutcomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HIGHER" | "H" => Ok(Outcome::Higher),
            "LOWER" | "L" => Ok(Outcome::Lower),
            other => Err(ParseOutcomeError(other.to_owned())),
        }
    }
}

/// Cell of the product outcome space of two base events, `a` first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum JointOutcome {
    #[serde(rename = "HH")]
    HigherHigher,
    #[serde(rename = "HL")]
    HigherLower,
    #[serde(rename = "LH")]
    LowerHigher,
    #[serde(rename = "LL")]
    LowerLower,
}

impl JointOutcome {
    pub const ALL: [JointOutcome; 4] = [
        JointOutcome::HigherHigher,
        JointOutcome::HigherLower,
        JointOutcome::LowerHigher,
        JointOutcome::LowerLower,
    ];

    pub fn index(self) -> usize {
        match self {
            JointOutcome::HigherHigher => 0,
            JointOutcome::HigherLower => 1,
            JointOutcome::LowerHigher => 2,
            JointOutcome::LowerLower => 3,
        }
    }

    pub fn from_parts(a: Outcome, b: Outcome) -> Self {
        match (a, b) {
            (Outcome::Higher, Outcome::Higher) => JointOutcome::HigherHigher,
            (Outcome::Higher, Outcome::Lower) => JointOutcome::HigherLower,
            (Outcome::Lower, Outcome::Higher) => JointOutcome::LowerHigher,
            (Outcome::Lower, Outcome::Lower) => JointOutcome::LowerLower,
        }
    }

    pub fn parts(self) -> (Outcome, Outcome) {
        match self {
            JointOutcome::HigherHigher => (Outcome::Higher, Outcome::Higher),
            JointOutcome::HigherLower => (Outcome::Higher, Outcome::Lower),
            JointOutcome::LowerHigher => (Outcome::Lower, Outcome::Higher),
            JointOutcome::LowerLower => (Outcome::Lower, Outcome::Lower),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointOutcome::HigherHigher => "HH",
            JointOutcome::HigherLower => "HL",
            JointOutcome::LowerHigher => "LH",
            JointOutcome::LowerLower => "LL",
        }
    }
}

impl FromStr for JointOutcome {
    type Err = ParseOutcomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HH" => Ok(JointOutcome::HigherHigher),
            "HL" => Ok(JointOutcome::HigherLower),
            "LH" => Ok(JointOutcome::LowerHigher),
            "LL" => Ok(JointOutcome::LowerLower),
            other => Err(ParseOutcomeError(other.to_owned())),
        }
    }
}

/// Outcome bought by a trade: a side of a base market or a joint cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TradeOutcome {
    Base(Outcome),
    Joint(JointOutcome),
}

impl TradeOutcome {
    pub fn index(self) -> usize {
        match self {
            TradeOutcome::Base(o) => o.index(),
            TradeOutcome::Joint(o) => o.index(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TradeOutcome::Base(o) => o.as_str(),
            TradeOutcome::Joint(o) => o.as_str(),
        }
    }
}

impl fmt::Display for TradeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<Outcome> for TradeOutcome {
    fn from(o: Outcome) -> Self {
        TradeOutcome::Base(o)
    }
}

impl From<JointOutcome> for TradeOutcome {
    fn from(o: JointOutcome) -> Self {
        TradeOutcome::Joint(o)
    }
}

impl FromStr for TradeOutcome {
    type Err = ParseOutcomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<Outcome>()
            .map(TradeOutcome::Base)
            .or_else(|_| s.parse::<JointOutcome>().map(TradeOutcome::Joint))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cents_display() {
        assert_eq!(Cents(999_487).to_string(), "€9994.87");
        assert_eq!(Cents(-5).to_string(), "-€0.05");
    }

    #[test]
    fn joint_outcome_parts_roundtrip() {
        for o in JointOutcome::ALL {
            let (a, b) = o.parts();
            assert_eq!(JointOutcome::from_parts(a, b), o);
        }
    }

    #[test]
    fn trade_outcome_parses_both_kinds() {
        assert_eq!("higher".parse::<TradeOutcome>().unwrap(), TradeOutcome::Base(Outcome::Higher));
        assert_eq!("LH".parse::<TradeOutcome>().unwrap(), TradeOutcome::Joint(JointOutcome::LowerHigher));
        assert!("sideways".parse::<TradeOutcome>().is_err());
    }
}
